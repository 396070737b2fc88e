// Wizard state: stage navigation, pending edits, and the revision mirror.
// The one hard rule: the UI never shows data from a revision older than the
// last write the server acknowledged.

import { ApiClient, ApiError } from './api.js';
import type { Edit, PreviewModel, ProjectInfo, StageId } from './types.js';

export type Listener = () => void;

const editKey = (edit: Edit): string => {
  // Coalesce repeated edits against the same target (slider drags etc.).
  let target: unknown = '';
  if (edit.step !== undefined) target = edit.step;
  else if (edit.name !== undefined) target = edit.name;
  else if (edit.from_step !== undefined) target = `${edit.from_step}->${edit.to_step}`;
  else if (edit.stage !== undefined) target = edit.stage;
  return `${edit.op}:${String(target)}`;
};

export class WizardState {
  activeStage: StageId = 1;
  project: ProjectInfo | null = null;
  preview: PreviewModel | null = null;
  pending: Edit[] = [];
  messages: string[] = [];
  private listeners: Listener[] = [];
  private writes: Promise<unknown>[] = [];

  constructor(
    public api: ApiClient,
    public projectId: string,
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get revision(): number {
    return this.project?.revision ?? -1;
  }

  say(message: string): void {
    this.messages.push(message);
    this.notify();
  }

  /** Pull project + preview; never regress to an older revision. */
  async refresh(): Promise<void> {
    const project = await this.api.getProject(this.projectId);
    const preview = await this.api.getPreview(this.projectId);
    if (this.project && project.revision < this.project.revision) {
      return; // raced with our own write; keep the newer state
    }
    this.project = project;
    if (!this.preview || preview.revision >= this.preview.revision) {
      this.preview = preview;
    }
    this.notify();
  }

  /** Stages 2-5 open once stage 1 has produced steps; back-nav is always free. */
  canOpen(stage: StageId): boolean {
    if (stage === 1) return true;
    const status = this.project?.stage_status['1'];
    return status === 'ai_done' || status === 'user_accepted';
  }

  goTo(stage: StageId): void {
    if (!this.canOpen(stage)) {
      this.say(`Run "Identify steps" before opening stage ${stage}.`);
      return;
    }
    this.activeStage = stage;
    this.notify();
  }

  async runStage(stage: StageId): Promise<void> {
    const run = this.api.runStage(this.projectId, stage).then(async (result) => {
      if (result.fallback_used) {
        this.say(`Stage ${stage} used a fallback: ${result.detail}`);
      }
      await this.refresh();
    });
    this.writes.push(run);
    await run;
  }

  queue(edit: Edit): void {
    const key = editKey(edit);
    this.pending = this.pending.filter((existing) => editKey(existing) !== key);
    this.pending.push(edit);
    this.notify();
  }

  /**
   * Push pending edits in one transactional PUT. 409 means another writer
   * got there first: refetch and surface; 422 means the server rejected the
   * change (overlap, cycle): surface and drop the batch, keeping the UI on
   * server truth without discarding messages or other stages' state.
   */
  async flush(stage: StageId): Promise<boolean> {
    if (this.pending.length === 0) return true;
    const edits = this.pending;
    this.pending = [];
    const write = (async () => {
      try {
        await this.api.applyEdits(this.projectId, stage, this.revision, edits);
        await this.refresh();
        return true;
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          this.say('Someone else edited this project; reloaded the latest version.');
          await this.refresh();
          return false;
        }
        if (error instanceof ApiError && error.status === 422) {
          this.say(`Rejected: ${error.detail}`);
          await this.refresh();
          return false;
        }
        throw error;
      }
    })();
    this.writes.push(write);
    return write;
  }

  async edit(stage: StageId, edit: Edit): Promise<boolean> {
    this.queue(edit);
    return this.flush(stage);
  }

  /** Await all in-flight writes (tests and view-button handlers). */
  async idle(): Promise<void> {
    while (this.writes.length > 0) {
      const batch = this.writes;
      this.writes = [];
      await Promise.allSettled(batch);
    }
  }
}

export const debounce = <A extends unknown[]>(fn: (...args: A) => void, ms: number) => {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
};
