// Preview fidelity: the render model must come out as the tutorial template
// elements — object list, hover image with bounding box, step cards with
// their objects, and labeled dependency arrows.

import { describe, expect, it } from 'vitest';

import { renderPreview } from '../src/preview';
import type { PreviewModel } from '../src/types';

const MODEL: PreviewModel = {
  video_id: 'seesaw',
  duration_s: 160,
  revision: 7,
  objects: [
    {
      name: 'wood screw',
      image_ref: 'frames/10.000.png',
      box: { x: 0.1, y: 0.2, w: 0.3, h: 0.4 },
      appearances: [10, 75],
    },
    { name: 'paint', image_ref: null, box: null, appearances: [] },
  ],
  steps: [
    {
      index: 0,
      title: 'Cut the wood pieces',
      start_s: 0,
      end_s: 40,
      thumbnail: 'frames/5.000.png',
      objects: ['wood screw'],
    },
    { index: 1, title: 'Paint it', start_s: 40, end_s: 160, thumbnail: null, objects: ['paint'] },
  ],
  arrows: [{ from_step: 0, to_step: 1, labels: ['wood screw'] }],
};

describe('renderPreview', () => {
  it('renders the object list with a hover image and positioned bounding box', () => {
    const dom = renderPreview(MODEL);
    const chips = dom.querySelectorAll('.object-list .object-chip');
    expect(chips).toHaveLength(2);

    const screw = dom.querySelector('.object-chip[data-object="wood screw"]')!;
    const hover = screw.querySelector<HTMLElement>('.object-hover')!;
    expect(hover.hidden).toBe(true);
    screw.dispatchEvent(new Event('mouseenter'));
    expect(hover.hidden).toBe(false);
    expect(hover.querySelector<HTMLImageElement>('img')!.src).toContain('frames/10.000.png');
    const box = hover.querySelector<HTMLElement>('.bounding-box')!;
    expect(box.style.left).toBe('10%');
    expect(box.style.top).toBe('20%');
    expect(box.style.width).toBe('30%');
    expect(box.style.height).toBe('40%');
    screw.dispatchEvent(new Event('mouseleave'));
    expect(hover.hidden).toBe(true);
  });

  it('degrades cleanly for objects without a detection', () => {
    const dom = renderPreview(MODEL);
    const paint = dom.querySelector('.object-chip[data-object="paint"]')!;
    expect(paint.querySelector('.object-hover')).toBeNull();
    expect(paint.querySelector('img')).toBeNull();
    expect(paint.querySelector('.object-name')!.textContent).toBe('paint');
  });

  it('renders step cards with title, time range, thumbnail, and object chips', () => {
    const dom = renderPreview(MODEL);
    const cards = dom.querySelectorAll('.step-cards .step-card');
    expect(cards).toHaveLength(2);
    const first = cards[0];
    expect(first.querySelector('.step-title')!.textContent).toBe('Cut the wood pieces');
    expect(first.querySelector('.step-range')!.textContent).toBe('0:00 - 0:40');
    expect(first.querySelector<HTMLImageElement>('.step-thumbnail')!.src).toContain(
      'frames/5.000.png',
    );
    expect(
      [...first.querySelectorAll('.step-object-chip')].map((chip) => chip.textContent),
    ).toEqual(['wood screw']);
    // second card has no thumbnail and must still render
    expect(cards[1].querySelector('.step-thumbnail')).toBeNull();
    expect(cards[1].querySelector('.step-title')!.textContent).toBe('Paint it');
  });

  it('renders dependency arrows with shared-object label buttons', () => {
    const dom = renderPreview(MODEL);
    const arrow = dom.querySelector('.dependency-arrow[data-from-step="0"][data-to-step="1"]')!;
    expect(arrow.querySelector('.arrow-ends')!.textContent).toContain('step 1');
    expect(arrow.querySelector('.arrow-ends')!.textContent).toContain('step 2');
    const labels = [...arrow.querySelectorAll('button.arrow-label')].map((b) => b.textContent);
    expect(labels).toEqual(['wood screw']);
  });

  it('carries the revision so the shell can prove freshness', () => {
    const dom = renderPreview(MODEL);
    expect(dom.dataset.revision).toBe('7');
  });
});
