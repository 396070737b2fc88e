// Payload shapes of the tutorialkit service API.

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface StepCard {
  index: number;
  title: string;
  start_s: number;
  end_s: number;
  thumbnail: string | null;
  objects: string[];
}

export interface PreviewObject {
  name: string;
  image_ref: string | null;
  box: Box | null;
  appearances: number[];
}

export interface Arrow {
  from_step: number;
  to_step: number;
  labels: string[];
}

export interface PreviewModel {
  video_id: string;
  duration_s: number;
  revision: number;
  objects: PreviewObject[];
  steps: StepCard[];
  arrows: Arrow[];
}

export type StageStatus = 'pending' | 'ai_done' | 'user_accepted';

export interface ProjectInfo {
  project_id: string;
  video_id: string;
  duration_s: number;
  revision: number;
  stage_status: Record<string, StageStatus>;
}

export interface StageRunResult {
  stage: number;
  status: StageStatus;
  revision: number;
  fallback_used: boolean;
  detail: string;
  result: unknown;
}

export interface ThumbnailResponse {
  step: number;
  k: number;
  candidates: string[];
}

/** One document edit; mirrors the server's edit ops. */
export interface Edit {
  op: string;
  [key: string]: unknown;
}

export type StageId = 1 | 2 | 3 | 4 | 5;

export const STAGE_TITLES: Record<StageId, string> = {
  1: 'Identify steps',
  2: 'Choose thumbnails',
  3: 'Select objects',
  4: 'Crop objects',
  5: 'Build dependencies',
};

export const formatTime = (seconds: number): string => {
  const total = Math.floor(seconds);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const mm = h > 0 ? String(m).padStart(2, '0') : String(m);
  return (h > 0 ? `${h}:${mm}:` : `${mm}:`) + String(s).padStart(2, '0');
};
