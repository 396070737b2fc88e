// Typed client over the service HTTP API. Every mutation goes through here;
// the UI keeps no state the server does not know about.

import type {
  Edit,
  PreviewModel,
  ProjectInfo,
  StageId,
  StageRunResult,
  ThumbnailResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface CreateProjectRequest {
  transcript: string;
  format?: string;
  video_id?: string;
  duration_s?: number;
  frames_dir?: string;
}

export interface CreateProjectResponse {
  project_id: string;
  video_id: string;
  revision: number;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch.bind(globalThis),
    private pollIntervalMs = 250,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, (payload as { detail?: string }).detail ?? response.statusText);
    }
    return payload as T;
  }

  createProject(body: CreateProjectRequest): Promise<CreateProjectResponse> {
    return this.request('POST', '/projects', body);
  }

  getProject(projectId: string): Promise<ProjectInfo> {
    return this.request('GET', `/projects/${projectId}`);
  }

  /**
   * Run a stage. A degraded run (provider outage, heuristic fallback) comes
   * back as 502 with the fallback applied; that is a result, not an error.
   * A 202 means the run detached; poll until it finishes.
   */
  async runStage(projectId: string, stage: StageId): Promise<StageRunResult> {
    const response = await this.fetchImpl(`${this.baseUrl}/projects/${projectId}/stages/${stage}/run`, {
      method: 'POST',
    });
    let payload = (await response.json().catch(() => ({}))) as Record<string, unknown>;
    if (response.status === 202) {
      const pollUrl = payload.poll_url as string;
      for (;;) {
        await sleep(this.pollIntervalMs);
        const poll = await this.fetchImpl(this.baseUrl + pollUrl, { method: 'GET' });
        payload = (await poll.json()) as Record<string, unknown>;
        if (payload.job_status === 'done') break;
        if (!poll.ok) throw new ApiError(poll.status, String(payload.detail ?? 'job failed'));
      }
      return payload as unknown as StageRunResult;
    }
    if (!response.ok && response.status !== 502) {
      throw new ApiError(response.status, String(payload.detail ?? response.statusText));
    }
    return payload as unknown as StageRunResult;
  }

  getStage(projectId: string, stage: StageId): Promise<{ stage: number; status: StageStatusLike; revision: number; result: unknown }> {
    return this.request('GET', `/projects/${projectId}/stages/${stage}`);
  }

  applyEdits(projectId: string, stage: StageId, revision: number, edits: Edit[]): Promise<{ revision: number }> {
    return this.request('PUT', `/projects/${projectId}/stages/${stage}`, { revision, edits });
  }

  getPreview(projectId: string): Promise<PreviewModel> {
    return this.request('GET', `/projects/${projectId}/preview`);
  }

  getThumbnails(projectId: string, step: number, k: number): Promise<ThumbnailResponse> {
    return this.request('GET', `/projects/${projectId}/thumbnails?step=${step}&k=${k}`);
  }
}

type StageStatusLike = string | null;
