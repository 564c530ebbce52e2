/**
 * Stub service and scripted event streams replaying a recorded job.
 */

import {
  JobStatePayload,
  ProgressEventPayload,
  StructuredReportPayload,
} from "../src/api.js";
import { StreamFactory } from "../src/events.js";

export const RECORDED_STAGES: string[] = [
  "soundness:method_extraction",
  "soundness:method_extraction:done",
  "soundness:retrieval",
  "soundness:summarization",
  "soundness:synthesis",
  "soundness:retrieval",
  "soundness:summarization",
  "soundness:synthesis",
  "soundness:retrieval",
  "soundness:summarization",
  "soundness:synthesis",
  "soundness:retrieval",
  "soundness:summarization",
  "soundness:synthesis",
  "soundness:tldr",
  "citation_audit",
  "done",
  "terminal",
];

export function recordedEvents(): ProgressEventPayload[] {
  return RECORDED_STAGES.map((stage) => ({ stage, detail: "", counts: {} }));
}

export function fourMethodReport(): StructuredReportPayload {
  const section = (i: number) => ({
    method_index: i,
    method: `method ${i + 1} of the idea`,
    support: `Support for method ${i + 1} [(Quimby et al., 2021-03)](https://c.example/a).`,
    contradictions: `Contradictions for method ${i + 1}.`,
    suggestions: `Suggestions for method ${i + 1}.`,
    soundness_score: 5 + (i % 3),
  });
  return {
    idea_id: "idea",
    soundness_tldr: "Top strengths:\n- strong precedent\n- grounded design",
    soundness_sections: [0, 1, 2, 3].map(section),
    contribution_sections: [
      {
        dimension: "methodology",
        strengths: "Novel angle [(Quimby et al., 2021-03)](https://c.example/a).",
        weaknesses: "Partially anticipated.",
        suggestions: "Differentiate explicitly.",
      },
    ],
    bibliography: [
      {
        key: "(Quimby et al., 2021-03)",
        title: "Paper a",
        url: "https://c.example/a",
        date: "2021-03",
      },
    ],
  };
}

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class StubService {
  submissions: unknown[] = [];
  jobState: JobStatePayload["state"] = "done";
  error: string | null = null;
  report: StructuredReportPayload = fourMethodReport();
  fetchCalls = 0;
  unreachable = false;

  readonly fetch: typeof fetch = async (input: RequestInfo | URL, init?: RequestInit) => {
    this.fetchCalls += 1;
    if (this.unreachable) {
      throw new TypeError("network down");
    }
    const url = String(input);
    if (url.endsWith("/evaluations") && init?.method === "POST") {
      this.submissions.push(JSON.parse(String(init.body)));
      return jsonResponse({ job_id: "job-1" }, 202);
    }
    if (/report\?format=structured$/.test(url)) {
      return jsonResponse(this.report);
    }
    if (/\/evaluations\/[^/]+$/.test(url)) {
      return jsonResponse({
        job_id: "job-1",
        idea_id: "idea",
        modules: ["soundness"],
        state: this.jobState,
        stage: "done",
        error: this.error,
      } satisfies JobStatePayload);
    }
    return jsonResponse({ detail: `unexpected url ${url}` }, 404);
  };
}

const tick = () => new Promise<void>((resolve) => setTimeout(resolve, 0));

/**
 * Scripted SSE source: every connection replays the full recorded log, like
 * the real service; one connection can be told to drop mid-replay.
 */
export class ScriptedStream {
  connections = 0;
  constructor(
    private readonly log: ProgressEventPayload[],
    private readonly dropConnection = 0,
    private readonly dropAfter = 0,
  ) {}

  readonly factory: StreamFactory = (url, onMessage, onError) => {
    this.connections += 1;
    const connection = this.connections;
    let closed = false;
    void (async () => {
      let delivered = 0;
      for (const event of this.log) {
        await tick();
        if (closed) return;
        onMessage(JSON.stringify(event));
        delivered += 1;
        if (connection === this.dropConnection && delivered === this.dropAfter) {
          onError();
          return;
        }
      }
    })();
    return {
      close: () => {
        closed = true;
      },
    };
  };
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 5000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await tick();
  }
  throw new Error("condition not met in time");
}
