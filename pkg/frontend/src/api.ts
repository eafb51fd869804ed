import type { Grid, GrooveResponse, Rating, StyleInfo, StyleName } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/**
 * Thin typed client for the survey service; the fetch implementation is
 * injectable so tests can script responses.
 */
export class SurveyApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    return response.json();
  }

  async styles(): Promise<StyleInfo[]> {
    const data = (await this.request("/api/styles")) as { styles: StyleInfo[] };
    return data.styles;
  }

  async createGroove(style: StyleName, kickGrid: Grid): Promise<GrooveResponse> {
    return (await this.request("/api/grooves", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ style, kick_grid: kickGrid }),
    })) as GrooveResponse;
  }

  async submitRating(grooveId: string, rating: Rating): Promise<void> {
    await this.request(`/api/grooves/${grooveId}/rating`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rating }),
    });
  }
}
