// The five editing stage views. Each renders from server truth (the preview
// model mirrors the document) and turns user actions into edits; rejected
// edits surface as messages and the view snaps back on the next render.

import { WizardState, debounce } from './state.js';
import type { StageId, StepCard } from './types.js';
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

const acceptButton = (state: WizardState, stage: StageId): HTMLElement => {
  const button = el('button', 'accept-stage', 'Accept results');
  button.addEventListener('click', () => {
    void state.edit(stage, { op: 'accept_stage', stage });
  });
  return button;
};

const numberInput = (className: string, value: number, step = 1): HTMLInputElement => {
  const input = el('input', className);
  input.type = 'number';
  input.step = String(step);
  input.value = String(value);
  return input;
};

export const renderStage1 = (state: WizardState): HTMLElement => {
  const root = el('div', 'stage stage-1');
  const steps = state.preview?.steps ?? [];
  const list = el('ol', 'step-editor-list');
  steps.forEach((step) => {
    const row = el('li', 'step-editor');
    row.dataset.step = String(step.index);

    const title = el('input', 'step-text');
    title.value = step.title;
    title.addEventListener('change', () => {
      void state.edit(1, { op: 'set_step_text', step: step.index, text: title.value });
    });
    row.appendChild(title);

    // Range slider over the step interval; both ends post one interval edit.
    const start = numberInput('step-start', step.start_s);
    const end = numberInput('step-end', step.end_s);
    const commit = () => {
      void state.edit(1, {
        op: 'set_step_interval',
        step: step.index,
        start_s: Number(start.value),
        end_s: Number(end.value),
      });
    };
    start.addEventListener('change', commit);
    end.addEventListener('change', commit);
    row.appendChild(start);
    row.appendChild(end);

    const remove = el('button', 'delete-step', 'Delete');
    remove.addEventListener('click', () => {
      void state.edit(1, { op: 'delete_step', step: step.index });
    });
    row.appendChild(remove);
    list.appendChild(row);
  });
  root.appendChild(list);

  const addTitle = el('input', 'add-step-title');
  const addStart = numberInput('add-step-start', 0);
  const addEnd = numberInput('add-step-end', 0);
  const add = el('button', 'add-step', 'Add step');
  add.addEventListener('click', () => {
    void state.edit(1, {
      op: 'add_step',
      title: addTitle.value,
      start_s: Number(addStart.value),
      end_s: Number(addEnd.value),
    });
  });
  root.append(addTitle, addStart, addEnd, add, acceptButton(state, 1));
  return root;
};

export const renderStage2 = (state: WizardState): HTMLElement => {
  const root = el('div', 'stage stage-2');
  const steps = state.preview?.steps ?? [];
  steps.forEach((step) => {
    const section = el('section', 'thumbnail-picker');
    section.dataset.step = String(step.index);
    section.appendChild(el('h3', undefined, step.title));

    const slider = el('input', 'show-more-less');
    slider.type = 'range';
    slider.min = '1';
    slider.max = '12';
    slider.value = '3';
    section.appendChild(slider);

    const grid = el('div', 'candidate-grid');
    section.appendChild(grid);

    const fill = async (k: number) => {
      const { candidates } = await state.api.getThumbnails(state.projectId, step.index, k);
      grid.replaceChildren();
      candidates.forEach((ref) => {
        const cell = el('img', 'candidate');
        cell.src = ref;
        if (ref === step.thumbnail) cell.classList.add('selected');
        cell.addEventListener('click', () => {
          void state.edit(2, { op: 'set_thumbnail', step: step.index, image_ref: ref });
        });
        grid.appendChild(cell);
      });
    };
    // Growing the grid must not drop the current selection: the selected ref
    // stays highlighted because selection lives on the server model.
    slider.addEventListener('input', debounce(() => void fill(Number(slider.value)), 300));
    void fill(Number(slider.value));
    root.appendChild(section);
  });
  root.appendChild(acceptButton(state, 2));
  return root;
};

export const renderStage3 = (state: WizardState): HTMLElement => {
  const root = el('div', 'stage stage-3');
  const model = state.preview;
  const steps = model?.steps ?? [];
  const list = el('ul', 'object-editor-list');
  (model?.objects ?? []).forEach((object) => {
    const row = el('li', 'object-editor');
    row.dataset.object = object.name;

    const name = el('input', 'object-rename');
    name.value = object.name;
    name.addEventListener('change', () => {
      void state.edit(3, { op: 'rename_object', name: object.name, new_name: name.value });
    });
    row.appendChild(name);

    const remove = el('button', 'delete-object', 'Delete');
    remove.addEventListener('click', () => {
      void state.edit(3, { op: 'delete_object', name: object.name });
    });
    row.appendChild(remove);

    const links = el('span', 'step-links');
    steps.forEach((step: StepCard) => {
      const label = el('label', 'step-link');
      const box = el('input');
      box.type = 'checkbox';
      box.checked = step.objects.includes(object.name);
      box.addEventListener('change', () => {
        const linked = steps
          .filter((other) =>
            other.index === step.index ? box.checked : other.objects.includes(object.name),
          )
          .map((other) => other.index);
        void state.edit(3, { op: 'set_object_step_links', name: object.name, steps: linked });
      });
      label.appendChild(box);
      label.appendChild(el('span', undefined, `step ${step.index + 1}`));
      links.appendChild(label);
    });
    row.appendChild(links);
    list.appendChild(row);
  });
  root.appendChild(list);

  const addName = el('input', 'add-object-name');
  const add = el('button', 'add-object', 'Add object');
  add.addEventListener('click', () => {
    void state.edit(3, { op: 'add_object', name: addName.value });
  });
  root.append(addName, add, acceptButton(state, 3));
  return root;
};

export const renderStage4 = (state: WizardState): HTMLElement => {
  const root = el('div', 'stage stage-4');
  (state.preview?.objects ?? []).forEach((object) => {
    const section = el('section', 'crop-editor');
    section.dataset.object = object.name;
    section.appendChild(el('h3', undefined, object.name));

    if (object.image_ref) {
      const img = el('img', 'crop-frame');
      img.src = object.image_ref;
      section.appendChild(img);
    }

    // Draggable/resizable box, expressed as its four fractions; editing any
    // fraction posts the adjusted box.
    const box = object.box ?? { x: 0.25, y: 0.25, w: 0.5, h: 0.5 };
    const inputs = (['x', 'y', 'w', 'h'] as const).map((axis) => {
      const input = numberInput(`box-${axis}`, box[axis], 0.01);
      return input;
    });
    const apply = el('button', 'apply-box', 'Apply box');
    apply.addEventListener('click', () => {
      const [x, y, w, h] = inputs.map((input) => Number(input.value));
      void state.edit(4, {
        op: 'set_object_box',
        name: object.name,
        image_ref: object.image_ref,
        box: { x, y, w, h },
      });
    });
    section.append(...inputs, apply);
    root.appendChild(section);
  });
  root.appendChild(acceptButton(state, 4));
  return root;
};

export const renderStage5 = (state: WizardState): HTMLElement => {
  const root = el('div', 'stage stage-5');
  const model = state.preview;
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('class', 'dag-editor');
  const steps = model?.steps ?? [];
  let source: number | null = null;

  // Nodes laid out left to right by step index; click one node then another
  // to draw a dependency (the pointer-drag gesture reduces to exactly this).
  steps.forEach((step) => {
    const node = document.createElementNS('http://www.w3.org/2000/svg', 'circle');
    node.setAttribute('class', 'dag-node');
    node.dataset.step = String(step.index);
    node.setAttribute('cx', String(60 + step.index * 120));
    node.setAttribute('cy', '60');
    node.setAttribute('r', '24');
    node.addEventListener('click', () => {
      if (source === null) {
        source = step.index;
        node.classList.add('link-source');
        return;
      }
      const from = source;
      source = null;
      void state.edit(5, { op: 'add_edge', from_step: from, to_step: step.index });
    });
    svg.appendChild(node);
  });

  (model?.arrows ?? []).forEach((arrow) => {
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'line');
    line.setAttribute('class', 'dag-edge');
    line.dataset.fromStep = String(arrow.from_step);
    line.dataset.toStep = String(arrow.to_step);
    line.setAttribute('x1', String(60 + arrow.from_step * 120));
    line.setAttribute('x2', String(60 + arrow.to_step * 120));
    line.setAttribute('y1', '60');
    line.setAttribute('y2', '60');
    line.addEventListener('dblclick', () => {
      void state.edit(5, {
        op: 'delete_edge',
        from_step: arrow.from_step,
        to_step: arrow.to_step,
      });
    });
    svg.appendChild(line);
  });
  root.appendChild(svg);

  const legend = el('ul', 'edge-legend');
  (model?.arrows ?? []).forEach((arrow) => {
    legend.appendChild(
      el(
        'li',
        'edge-legend-entry',
        `step ${arrow.from_step + 1} → step ${arrow.to_step + 1}: ${arrow.labels.join(', ') || '(manual)'}`,
      ),
    );
  });
  root.appendChild(legend);
  root.appendChild(acceptButton(state, 5));
  return root;
};

export const STAGE_RENDERERS: Record<StageId, (state: WizardState) => HTMLElement> = {
  1: renderStage1,
  2: renderStage2,
  3: renderStage3,
  4: renderStage4,
  5: renderStage5,
};

export const stageSummary = (state: WizardState, stage: StageId): string => {
  const status = state.project?.stage_status[String(stage)] ?? 'pending';
  const steps = state.preview?.steps.length ?? 0;
  return `stage ${stage} [${status}] over ${steps} steps, video time ${formatTime(
    state.preview?.duration_s ?? 0,
  )}`;
};
