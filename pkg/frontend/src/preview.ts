// Live tutorial preview: video slot, object list with hover images, step
// overview cards, and labeled dependency arrows.

import type { PreviewModel, PreviewObject } from './types.js';
import { formatTime } from './types.js';

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

const renderObjectEntry = (object: PreviewObject): HTMLElement => {
  const item = el('li', 'object-chip');
  item.dataset.object = object.name;
  item.appendChild(el('span', 'object-name', object.name));

  // Hover card only when there is an image to show; a missing detection must
  // not break the layout.
  if (object.image_ref) {
    const hover = el('div', 'object-hover');
    hover.hidden = true;
    const img = el('img', 'object-image');
    img.src = object.image_ref;
    img.alt = object.name;
    hover.appendChild(img);
    if (object.box) {
      const box = el('div', 'bounding-box');
      box.style.left = `${object.box.x * 100}%`;
      box.style.top = `${object.box.y * 100}%`;
      box.style.width = `${object.box.w * 100}%`;
      box.style.height = `${object.box.h * 100}%`;
      hover.appendChild(box);
    }
    item.appendChild(hover);
    item.addEventListener('mouseenter', () => {
      hover.hidden = false;
    });
    item.addEventListener('mouseleave', () => {
      hover.hidden = true;
    });
  }
  if (object.appearances.length > 0) {
    item.appendChild(
      el('span', 'object-appearances', object.appearances.map(formatTime).join(' ')),
    );
  }
  return item;
};

export const renderPreview = (model: PreviewModel): HTMLElement => {
  const root = el('div', 'tutorial-preview');
  root.dataset.revision = String(model.revision);

  const player = el('div', 'tutorial-player');
  player.appendChild(el('span', 'player-video-id', model.video_id));
  player.appendChild(el('span', 'player-duration', formatTime(model.duration_s)));
  root.appendChild(player);

  const objects = el('ul', 'object-list');
  for (const object of model.objects) objects.appendChild(renderObjectEntry(object));
  root.appendChild(objects);

  const cards = el('ol', 'step-cards');
  for (const step of model.steps) {
    const card = el('li', 'step-card');
    card.dataset.step = String(step.index);
    card.appendChild(el('h3', 'step-title', step.title));
    card.appendChild(
      el('span', 'step-range', `${formatTime(step.start_s)} - ${formatTime(step.end_s)}`),
    );
    if (step.thumbnail) {
      const thumb = el('img', 'step-thumbnail');
      thumb.src = step.thumbnail;
      thumb.alt = `thumbnail for step ${step.index + 1}`;
      card.appendChild(thumb);
    }
    const chips = el('ul', 'step-objects');
    for (const name of step.objects) chips.appendChild(el('li', 'step-object-chip', name));
    card.appendChild(chips);
    cards.appendChild(card);
  }
  root.appendChild(cards);

  const arrows = el('ul', 'dependency-arrows');
  for (const arrow of model.arrows) {
    const item = el('li', 'dependency-arrow');
    item.dataset.fromStep = String(arrow.from_step);
    item.dataset.toStep = String(arrow.to_step);
    item.appendChild(
      el('span', 'arrow-ends', `step ${arrow.from_step + 1} → step ${arrow.to_step + 1}`),
    );
    const labels = el('span', 'arrow-labels');
    for (const label of arrow.labels) labels.appendChild(el('button', 'arrow-label', label));
    item.appendChild(labels);
    arrows.appendChild(item);
  }
  root.appendChild(arrows);
  return root;
};
