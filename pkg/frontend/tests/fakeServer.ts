// In-memory double of the tutorialkit service HTTP contract, faithful where
// the client cares: revision checks, overlap/cycle rejection, edit cascades,
// stage runs with canned results, 202+poll, and 502-with-fallback.

import type { Box } from '../src/types';

interface FakeStep {
  title: string;
  start_s: number;
  end_s: number;
  thumbnail: string | null;
  objects: string[];
}

interface FakeObject {
  name: string;
  box: Box | null;
  appearances: number[];
  image_ref: string | null;
}

interface FakeEdge {
  from_step: number;
  to_step: number;
  shared_objects: string[];
  manual: boolean;
}

export interface FakeDoc {
  video_id: string;
  duration_s: number;
  revision: number;
  steps: FakeStep[];
  objects: FakeObject[];
  edges: FakeEdge[];
  stage_status: Record<string, string>;
}

export interface FakeOptions {
  slowStages?: number[];
  failingStages?: number[]; // provider outage: 502 + heuristic fallback
}

const json = (body: unknown, status = 200): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });

const FRAME_TIMES = Array.from({ length: 24 }, (_, i) => i * 5); // 0..115 s

export class FakeService {
  docs = new Map<string, FakeDoc>();
  jobs = new Map<string, { project: string; stage: number; done: boolean }>();
  private counter = 0;

  constructor(public options: FakeOptions = {}) {}

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), 'http://fake');
    const method = (init?.method ?? 'GET').toUpperCase();
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const parts = url.pathname.split('/').filter(Boolean);

    if (method === 'POST' && url.pathname === '/projects') {
      if (!body?.transcript || !/\d+:\d\d/.test(body.transcript)) {
        return json({ detail: 'no cue parsed' }, 400);
      }
      const id = `p${this.counter++}`;
      this.docs.set(id, {
        video_id: body.video_id ?? '',
        duration_s: body.duration_s ?? 120,
        revision: 0,
        steps: [],
        objects: [],
        edges: [],
        stage_status: { 1: 'pending', 2: 'pending', 3: 'pending', 4: 'pending', 5: 'pending' },
      });
      return json({ project_id: id, video_id: body.video_id ?? '', revision: 0 }, 201);
    }

    const doc = this.docs.get(parts[1]);
    if (!doc) return json({ detail: `no project ${parts[1]}` }, 404);

    if (method === 'GET' && parts.length === 2) {
      return json({
        project_id: parts[1],
        video_id: doc.video_id,
        duration_s: doc.duration_s,
        revision: doc.revision,
        stage_status: { ...doc.stage_status },
      });
    }
    if (method === 'GET' && parts[2] === 'preview') return json(this.preview(doc));
    if (method === 'GET' && parts[2] === 'thumbnails') {
      const step = doc.steps[Number(url.searchParams.get('step'))];
      if (!step) return json({ detail: 'no step' }, 404);
      const k = Number(url.searchParams.get('k') ?? 3);
      const inside = FRAME_TIMES.filter((t) => step.start_s <= t && t <= step.end_s);
      return json({
        step: Number(url.searchParams.get('step')),
        k,
        candidates: inside.slice(0, k).map((t) => `frames/${t.toFixed(3)}.png`),
      });
    }
    if (method === 'GET' && parts[2] === 'jobs') {
      const job = this.jobs.get(parts[3]);
      if (!job || job.project !== parts[1]) return json({ detail: 'no job' }, 404);
      if (!job.done) {
        job.done = true; // second poll completes
        return json({ job_id: parts[3], job_status: 'running' });
      }
      this.jobs.delete(parts[3]);
      const [payload, status] = this.runStage(doc, job.stage);
      return json({ job_id: parts[3], job_status: 'done', ...payload }, status);
    }
    if (method === 'POST' && parts[2] === 'stages' && parts[4] === 'run') {
      const stage = Number(parts[3]);
      if (stage !== 1 && doc.stage_status['1'] === 'pending') {
        return json({ detail: `stage ${stage} needs stage 1 to run first` }, 409);
      }
      if ((stage === 4 || stage === 5) && doc.stage_status['3'] === 'pending') {
        return json({ detail: `stage ${stage} needs stage 3 to run first` }, 409);
      }
      if (this.options.slowStages?.includes(stage)) {
        const jobId = `j${this.counter++}`;
        this.jobs.set(jobId, { project: parts[1], stage, done: false });
        return json(
          { job_id: jobId, job_status: 'running', poll_url: `/projects/${parts[1]}/jobs/${jobId}` },
          202,
        );
      }
      const [payload, status] = this.runStage(doc, stage);
      return json(payload, status);
    }
    if (method === 'PUT' && parts[2] === 'stages') {
      if (body.revision !== doc.revision) {
        return json({ detail: `expected revision ${body.revision}, document is at ${doc.revision}` }, 409);
      }
      const next = structuredClone(doc);
      try {
        for (const edit of body.edits ?? []) this.applyEdit(next, edit);
      } catch (error) {
        return json({ detail: String((error as Error).message) }, 422);
      }
      next.revision += 1;
      this.docs.set(parts[1], next);
      return json({ revision: next.revision, stage: Number(parts[3]) });
    }
    if (method === 'GET' && parts[2] === 'stages') {
      return json({ stage: Number(parts[3]), status: doc.stage_status[parts[3]], revision: doc.revision, result: {} });
    }
    return json({ detail: 'no route' }, 404);
  };

  private runStage(doc: FakeDoc, stage: number): [Record<string, unknown>, number] {
    const failed = this.options.failingStages?.includes(stage) ?? false;
    if (stage === 1) {
      doc.steps = failed
        ? [{ title: 'today we are building', start_s: 0, end_s: doc.duration_s, thumbnail: null, objects: [] }]
        : [
            { title: 'Cut the wood pieces', start_s: 0, end_s: 40, thumbnail: null, objects: [] },
            { title: 'Join the frame', start_s: 40, end_s: 80, thumbnail: null, objects: [] },
            { title: 'Paint and finish', start_s: 80, end_s: 120, thumbnail: null, objects: [] },
            { title: 'Final check', start_s: 120, end_s: doc.duration_s, thumbnail: null, objects: [] },
          ];
      doc.edges = [];
    } else if (stage === 2) {
      doc.steps.forEach((step) => {
        const inside = FRAME_TIMES.filter((t) => step.start_s <= t && t <= step.end_s);
        step.thumbnail = inside.length ? `frames/${inside[0].toFixed(3)}.png` : null;
      });
    } else if (stage === 3) {
      doc.objects = ['screw', 'wood board', 'paint'].map((name) => ({
        name,
        box: null,
        appearances: [],
        image_ref: null,
      }));
      doc.steps.forEach((step, i) => {
        step.objects = i < 2 ? ['screw', 'wood board'] : ['paint'];
      });
    } else if (stage === 4) {
      doc.objects.forEach((object, i) => {
        object.box = { x: 0.1 * (i + 1), y: 0.1, w: 0.2, h: 0.2 };
        object.appearances = [10 * (i + 1)];
        object.image_ref = `frames/${(10 * (i + 1)).toFixed(3)}.png`;
      });
    } else if (stage === 5) {
      const byObject = new Map<string, number[]>();
      doc.steps.forEach((step, i) =>
        step.objects.forEach((name) => byObject.set(name, [...(byObject.get(name) ?? []), i])),
      );
      const edges = new Map<string, FakeEdge>();
      for (const [name, steps] of byObject) {
        for (let i = 0; i + 1 < steps.length; i++) {
          const key = `${steps[i]}-${steps[i + 1]}`;
          const edge = edges.get(key) ?? {
            from_step: steps[i],
            to_step: steps[i + 1],
            shared_objects: [],
            manual: false,
          };
          edge.shared_objects.push(name);
          edges.set(key, edge);
        }
      }
      const manual = doc.edges.filter((e) => e.manual && !edges.has(`${e.from_step}-${e.to_step}`));
      doc.edges = [...edges.values(), ...manual].sort(
        (a, b) => a.from_step - b.from_step || a.to_step - b.to_step,
      );
    }
    doc.stage_status[String(stage)] = 'ai_done';
    doc.revision += 1;
    const payload = {
      stage,
      status: 'ai_done',
      revision: doc.revision,
      fallback_used: failed,
      detail: failed ? 'provider failed (injected outage); used heuristic segmentation' : '',
      result: stage === 1 ? { steps: doc.steps } : {},
    };
    return [payload, failed ? 502 : 200];
  }

  private applyEdit(doc: FakeDoc, edit: Record<string, unknown>): void {
    const op = edit.op as string;
    const stepAt = (i: unknown): FakeStep => {
      const step = doc.steps[Number(i)];
      if (!step) throw new Error(`no step ${i}`);
      return step;
    };
    const objectAt = (name: unknown): FakeObject => {
      const object = doc.objects.find((o) => o.name === name);
      if (!object) throw new Error(`no object ${name}`);
      return object;
    };
    if (op === 'set_step_text') {
      stepAt(edit.step).title = String(edit.text);
    } else if (op === 'set_step_interval') {
      const index = Number(edit.step);
      const step = stepAt(index);
      const start = Number(edit.start_s);
      const end = Number(edit.end_s);
      const prev = doc.steps[index - 1];
      const next = doc.steps[index + 1];
      if (end <= start || start < 0 || end > doc.duration_s) throw new Error('interval out of range');
      if ((prev && start < prev.end_s) || (next && end > next.start_s)) {
        throw new Error(`interval [${start}, ${end}] overlaps a neighbouring step`);
      }
      step.start_s = start;
      step.end_s = end;
    } else if (op === 'delete_step') {
      const index = Number(edit.step);
      stepAt(index);
      doc.steps.splice(index, 1);
      doc.edges = doc.edges
        .filter((e) => e.from_step !== index && e.to_step !== index)
        .map((e) => ({
          ...e,
          from_step: e.from_step > index ? e.from_step - 1 : e.from_step,
          to_step: e.to_step > index ? e.to_step - 1 : e.to_step,
        }));
    } else if (op === 'add_step') {
      doc.steps.push({
        title: String(edit.title),
        start_s: Number(edit.start_s),
        end_s: Number(edit.end_s),
        thumbnail: null,
        objects: [],
      });
      doc.steps.sort((a, b) => a.start_s - b.start_s);
    } else if (op === 'set_thumbnail') {
      stepAt(edit.step).thumbnail = (edit.image_ref as string) ?? null;
    } else if (op === 'add_object') {
      doc.objects.push({ name: String(edit.name), box: null, appearances: [], image_ref: null });
    } else if (op === 'rename_object') {
      const object = objectAt(edit.name);
      const fresh = String(edit.new_name);
      doc.steps.forEach((step) => {
        step.objects = step.objects.map((n) => (n === object.name ? fresh : n));
      });
      doc.edges.forEach((edge) => {
        edge.shared_objects = edge.shared_objects.map((n) => (n === object.name ? fresh : n));
      });
      object.name = fresh;
    } else if (op === 'delete_object') {
      const object = objectAt(edit.name);
      doc.objects = doc.objects.filter((o) => o !== object);
      doc.steps.forEach((step) => {
        step.objects = step.objects.filter((n) => n !== object.name);
      });
    } else if (op === 'set_object_step_links') {
      const object = objectAt(edit.name);
      const wanted = new Set((edit.steps as number[]) ?? []);
      doc.steps.forEach((step, i) => {
        const has = step.objects.includes(object.name);
        if (wanted.has(i) && !has) step.objects.push(object.name);
        if (!wanted.has(i) && has) step.objects = step.objects.filter((n) => n !== object.name);
      });
    } else if (op === 'set_object_box') {
      const object = objectAt(edit.name);
      object.box = edit.box as Box;
      if (edit.image_ref) object.image_ref = edit.image_ref as string;
    } else if (op === 'add_edge') {
      const from = Number(edit.from_step);
      const to = Number(edit.to_step);
      if (!doc.steps[from] || !doc.steps[to]) throw new Error('no such step');
      if (from >= to) throw new Error(`edge (${from} -> ${to}) breaks step order`);
      doc.edges.push({ from_step: from, to_step: to, shared_objects: [], manual: true });
    } else if (op === 'delete_edge') {
      doc.edges = doc.edges.filter(
        (e) => !(e.from_step === Number(edit.from_step) && e.to_step === Number(edit.to_step)),
      );
    } else if (op === 'accept_stage') {
      doc.stage_status[String(edit.stage)] = 'user_accepted';
    } else {
      throw new Error(`unknown edit op ${op}`);
    }
  }

  private preview(doc: FakeDoc) {
    return {
      video_id: doc.video_id,
      duration_s: doc.duration_s,
      revision: doc.revision,
      objects: doc.objects.map((o) => ({
        name: o.name,
        image_ref: o.image_ref,
        box: o.box,
        appearances: o.appearances,
      })),
      steps: doc.steps.map((s, i) => ({
        index: i,
        title: s.title,
        start_s: s.start_s,
        end_s: s.end_s,
        thumbnail: s.thumbnail,
        objects: [...s.objects],
      })),
      arrows: doc.edges.map((e) => ({
        from_step: e.from_step,
        to_step: e.to_step,
        labels: [...e.shared_objects].sort(),
      })),
    };
  }
}
