// Application shell: wizard stepper over the five stages, run/view controls,
// message strip, and the live preview panel.

import { ApiClient } from './api.js';
import { renderPreview } from './preview.js';
import { STAGE_RENDERERS } from './stages.js';
import { WizardState } from './state.js';
import type { StageId } from './types.js';
import { STAGE_TITLES } from './types.js';

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

export const mountEditor = (root: HTMLElement, state: WizardState): void => {
  const render = () => {
    root.replaceChildren();

    const nav = el('nav', 'stage-nav');
    ([1, 2, 3, 4, 5] as StageId[]).forEach((stage) => {
      const button = el('button', 'stage-tab', `${stage}. ${STAGE_TITLES[stage]}`);
      if (stage === state.activeStage) button.classList.add('active');
      if (!state.canOpen(stage)) button.disabled = true;
      button.addEventListener('click', () => state.goTo(stage));
      nav.appendChild(button);
    });
    root.appendChild(nav);

    const controls = el('div', 'stage-controls');
    const run = el('button', 'run-stage', 'Run AI extraction');
    run.addEventListener('click', () => void state.runStage(state.activeStage));
    controls.appendChild(run);
    const view = el('button', 'view-tutorial', 'View');
    view.addEventListener('click', () => {
      void state.refresh().then(() => render());
    });
    controls.appendChild(view);
    root.appendChild(controls);

    const messages = el('ul', 'messages');
    state.messages.slice(-5).forEach((text) => messages.appendChild(el('li', 'message', text)));
    root.appendChild(messages);

    root.appendChild(STAGE_RENDERERS[state.activeStage](state));

    if (state.preview) {
      const panel = el('aside', 'preview-panel');
      panel.appendChild(renderPreview(state.preview));
      root.appendChild(panel);
    }
  };

  state.onChange(render);
  render();
};

export const bootstrap = async (root: HTMLElement, baseUrl: string): Promise<void> => {
  const api = new ApiClient(baseUrl);
  const form = el('div', 'create-project');
  const transcript = el('textarea', 'transcript-input');
  transcript.placeholder = 'Paste a WebVTT / SRT / timed-lines transcript';
  const videoId = el('input', 'video-id-input');
  videoId.placeholder = 'video id';
  const frames = el('input', 'frames-dir-input');
  frames.placeholder = 'frames directory (optional)';
  const create = el('button', 'create-button', 'Create project');
  create.addEventListener('click', async () => {
    const project = await api.createProject({
      transcript: transcript.value,
      video_id: videoId.value,
      frames_dir: frames.value || undefined,
    });
    const state = new WizardState(api, project.project_id);
    await state.refresh();
    mountEditor(root, state);
  });
  form.append(transcript, videoId, frames, create);
  root.replaceChildren(form);
};
