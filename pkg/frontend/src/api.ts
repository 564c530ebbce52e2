/**
 * Typed client for the evaluation service. The UI talks to these four
 * documented endpoints and nothing else.
 */

export type ModuleName = "soundness" | "contribution";

export interface SubmitPayload {
  idea_text: string;
  idea_id?: string;
  cutoff_date?: string | null;
  modules: ModuleName[];
}

export interface JobStatePayload {
  job_id: string;
  idea_id: string;
  modules: ModuleName[];
  state: "queued" | "running" | "done" | "failed";
  stage: string;
  error: string | null;
}

export interface SoundnessSectionPayload {
  method_index: number;
  method: string;
  support: string;
  contradictions: string;
  suggestions: string;
  soundness_score: number;
}

export interface ContributionSectionPayload {
  dimension: string;
  strengths: string;
  weaknesses: string;
  suggestions: string;
}

export interface BibliographyEntryPayload {
  key: string;
  title: string;
  url: string;
  date: string | null;
}

export interface StructuredReportPayload {
  idea_id: string;
  soundness_tldr: string | null;
  soundness_sections: SoundnessSectionPayload[];
  contribution_sections: ContributionSectionPayload[];
  bibliography: BibliographyEntryPayload[];
}

export interface ProgressEventPayload {
  stage: string;
  detail: string;
  counts: Record<string, number>;
}

export class ServiceError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(detail, response.status);
    }
    return response.json();
  }

  async submit(payload: SubmitPayload): Promise<string> {
    const body = (await this.request("/evaluations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    })) as { job_id: string };
    return body.job_id;
  }

  async jobState(jobId: string): Promise<JobStatePayload> {
    return (await this.request(`/evaluations/${jobId}`)) as JobStatePayload;
  }

  async structuredReport(jobId: string): Promise<StructuredReportPayload> {
    return (await this.request(
      `/evaluations/${jobId}/report?format=structured`,
    )) as StructuredReportPayload;
  }

  eventsUrl(jobId: string): string {
    return `${this.baseUrl}/evaluations/${jobId}/events`;
  }
}
