import { SurveyApi } from "../src/api.js";
import { KIT_VOICES, emptyGrid, type Grid, type GrooveResponse } from "../src/types.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export interface FakeService {
  api: SurveyApi;
  requests: RecordedRequest[];
  /** Force the next createGroove call to fail with this status. */
  failNextGenerate: (status: number) => void;
}

export function grooveResponse(id: string): GrooveResponse {
  const steps = Object.fromEntries(
    KIT_VOICES.map((voice) => [voice, emptyGrid()]),
  ) as Record<(typeof KIT_VOICES)[number], Grid>;
  steps.S[0][12] = true;
  steps.S[0][36] = true;
  steps.H[0][0] = true;
  return {
    id,
    style: "rock",
    output_phrase: "rock " + Array(48).fill("o").join(" "),
    steps,
  };
}

export function fakeService(): FakeService {
  const requests: RecordedRequest[] = [];
  let grooveCounter = 0;
  let nextGenerateFailure: number | null = null;
  const ratedIds = new Set<string>();

  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    requests.push({ url, method, body });

    if (url.endsWith("/api/styles")) {
      return jsonResponse(200, {
        styles: [
          { name: "pop", tempo_bpm: 104 },
          { name: "rock", tempo_bpm: 112 },
          { name: "funk", tempo_bpm: 96 },
          { name: "afrocuban", tempo_bpm: 120 },
        ],
      });
    }
    if (url.endsWith("/api/grooves") && method === "POST") {
      if (nextGenerateFailure !== null) {
        const status = nextGenerateFailure;
        nextGenerateFailure = null;
        return jsonResponse(status, { detail: "scripted failure" });
      }
      grooveCounter += 1;
      return jsonResponse(200, grooveResponse(`groove-${grooveCounter}`));
    }
    const rating = url.match(/\/api\/grooves\/([^/]+)\/rating$/);
    if (rating && method === "POST") {
      const id = rating[1];
      if (ratedIds.has(id)) {
        return jsonResponse(409, { detail: "already rated" });
      }
      ratedIds.add(id);
      return jsonResponse(200, { id, rating: body.rating });
    }
    return jsonResponse(404, { detail: `no route for ${method} ${url}` });
  }) as typeof fetch;

  return {
    api: new SurveyApi("", fetchFn),
    requests,
    failNextGenerate: (status) => {
      nextGenerateFailure = status;
    },
  };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Deterministic manual clock for driving the lookahead scheduler. */
export class FakeClock {
  private time = 0;
  private handlers = new Map<number, () => void>();
  private nextId = 1;

  now(): number {
    return this.time;
  }

  setInterval(handler: () => void, _ms: number): number {
    const id = this.nextId++;
    this.handlers.set(id, handler);
    return id;
  }

  clearInterval(id: number): void {
    this.handlers.delete(id);
  }

  /** Advance the audio clock and fire every registered interval once. */
  tick(seconds: number): void {
    this.time += seconds;
    for (const handler of [...this.handlers.values()]) {
      handler();
    }
  }
}
