/**
 * View state: the idea draft, cutoff selection, active tab, one job binding
 * per tab, and the set of expanded report sections. The draft and cutoff
 * persist to localStorage so they survive failures and page refreshes.
 */

export type Tab = "soundness" | "contribution";

export interface JobBinding {
  jobId: string;
  state: "queued" | "running" | "done" | "failed";
  stages: string[];
}

const DRAFT_KEY = "scholareval.draft";
const CUTOFF_KEY = "scholareval.cutoff";

export class ViewState {
  activeTab: Tab = "soundness";
  readonly bindings = new Map<Tab, JobBinding | null>([
    ["soundness", null],
    ["contribution", null],
  ]);
  readonly expanded = new Set<string>();

  private draftText: string;
  private cutoffText: string;

  constructor(private readonly storage: Storage = localStorage) {
    this.draftText = storage.getItem(DRAFT_KEY) ?? "";
    this.cutoffText = storage.getItem(CUTOFF_KEY) ?? "";
  }

  get draft(): string {
    return this.draftText;
  }

  set draft(value: string) {
    this.draftText = value;
    this.storage.setItem(DRAFT_KEY, value);
  }

  get cutoff(): string {
    return this.cutoffText;
  }

  set cutoff(value: string) {
    this.cutoffText = value;
    this.storage.setItem(CUTOFF_KEY, value);
  }

  /** At most one live binding per tab; binding a tab replaces its old job. */
  bind(tab: Tab, jobId: string): JobBinding {
    const binding: JobBinding = { jobId, state: "queued", stages: [] };
    this.bindings.set(tab, binding);
    return binding;
  }

  binding(tab: Tab): JobBinding | null {
    return this.bindings.get(tab) ?? null;
  }

  toggleSection(sectionId: string): boolean {
    if (this.expanded.has(sectionId)) {
      this.expanded.delete(sectionId);
      return false;
    }
    this.expanded.add(sectionId);
    return true;
  }
}
