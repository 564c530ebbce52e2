/**
 * Application shell: idea entry with optional file upload and cutoff date,
 * one tab per module, live progress, and report reading. Each tab owns an
 * independent job binding, so soundness and contribution can run
 * concurrently against distinct jobs.
 */

import { ModuleName, ServiceClient, ServiceError } from "./api.js";
import { EventLogConsumer, StreamFactory, eventSourceFactory } from "./events.js";
import { renderReport } from "./report.js";
import { Tab, ViewState } from "./state.js";

const TABS: Tab[] = ["soundness", "contribution"];

interface TabElements {
  button: HTMLButtonElement;
  panel: HTMLDivElement;
  stages: HTMLOListElement;
  status: HTMLParagraphElement;
  report: HTMLDivElement;
}

export interface AppOptions {
  streamFactory?: StreamFactory;
  reconnectDelayMs?: number;
  state?: ViewState;
}

export class App {
  readonly state: ViewState;
  private readonly tabElements = new Map<Tab, TabElements>();
  private readonly consumers = new Map<Tab, EventLogConsumer>();
  private draftInput!: HTMLTextAreaElement;
  private cutoffInput!: HTMLInputElement;
  private errorBanner!: HTMLDivElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient,
    private readonly options: AppOptions = {},
  ) {
    this.state = options.state ?? new ViewState();
    this.build();
  }

  private build(): void {
    this.root.innerHTML = "";
    const heading = document.createElement("h1");
    heading.textContent = "Research Idea Evaluation";
    this.root.appendChild(heading);

    const entry = document.createElement("section");
    entry.className = "idea-entry";

    this.draftInput = document.createElement("textarea");
    this.draftInput.className = "idea-draft";
    this.draftInput.placeholder = "Enter your research idea";
    this.draftInput.value = this.state.draft;
    this.draftInput.addEventListener("input", () => {
      this.state.draft = this.draftInput.value;
    });
    entry.appendChild(this.draftInput);

    const upload = document.createElement("input");
    upload.type = "file";
    upload.className = "idea-upload";
    upload.addEventListener("change", () => {
      const file = upload.files?.[0];
      if (!file) return;
      void file.text().then((text) => {
        this.draftInput.value = text;
        this.state.draft = text;
      });
    });
    entry.appendChild(upload);

    const cutoffLabel = document.createElement("label");
    cutoffLabel.textContent = "Literature cutoff date (optional): ";
    this.cutoffInput = document.createElement("input");
    this.cutoffInput.type = "date";
    this.cutoffInput.className = "cutoff-input";
    this.cutoffInput.value = this.state.cutoff;
    this.cutoffInput.addEventListener("input", () => {
      this.state.cutoff = this.cutoffInput.value;
    });
    cutoffLabel.appendChild(this.cutoffInput);
    entry.appendChild(cutoffLabel);
    this.root.appendChild(entry);

    this.errorBanner = document.createElement("div");
    this.errorBanner.className = "error-banner";
    this.errorBanner.hidden = true;
    this.root.appendChild(this.errorBanner);

    const nav = document.createElement("nav");
    nav.className = "tabs";
    const panels = document.createElement("div");
    panels.className = "tab-panels";
    for (const tab of TABS) {
      const button = document.createElement("button");
      button.className = `tab-button tab-${tab}`;
      button.textContent = tab === "soundness" ? "Soundness" : "Contribution";
      button.addEventListener("click", () => this.switchTab(tab));
      nav.appendChild(button);

      const panel = document.createElement("div");
      panel.className = `tab-panel panel-${tab}`;

      const generate = document.createElement("button");
      generate.className = `generate-button generate-${tab}`;
      generate.textContent =
        tab === "soundness" ? "Generate Soundness review" : "Generate Contribution review";
      generate.addEventListener("click", () => void this.submitIdea(tab));
      panel.appendChild(generate);

      const status = document.createElement("p");
      status.className = "job-status";
      panel.appendChild(status);

      const stages = document.createElement("ol");
      stages.className = "progress-stages";
      panel.appendChild(stages);

      const report = document.createElement("div");
      report.className = "report-container";
      panel.appendChild(report);

      panels.appendChild(panel);
      this.tabElements.set(tab, { button, panel, stages, status, report });
    }
    this.root.appendChild(nav);
    this.root.appendChild(panels);
    this.switchTab(this.state.activeTab);
  }

  switchTab(tab: Tab): void {
    this.state.activeTab = tab;
    for (const [name, elements] of this.tabElements) {
      const active = name === tab;
      elements.panel.style.display = active ? "" : "none";
      elements.button.classList.toggle("active", active);
    }
  }

  private showError(message: string): void {
    this.errorBanner.textContent = message;
    this.errorBanner.hidden = false;
  }

  private clearError(): void {
    this.errorBanner.hidden = true;
    this.errorBanner.textContent = "";
  }

  /** Submit the draft for one module; inline validation never drops the draft. */
  async submitIdea(tab: Tab): Promise<void> {
    this.clearError();
    const draft = this.draftInput.value;
    if (!draft.trim()) {
      this.showError("Please enter a research idea before generating a review.");
      return;
    }
    const elements = this.tabElements.get(tab)!;
    let jobId: string;
    try {
      jobId = await this.client.submit({
        idea_text: draft,
        cutoff_date: this.cutoffInput.value || null,
        modules: [tab as ModuleName],
      });
    } catch (err) {
      const reason = err instanceof ServiceError ? err.message : String(err);
      this.showError(`Submission failed: ${reason}. Your draft is preserved.`);
      return;
    }
    const binding = this.state.bind(tab, jobId);
    binding.state = "running";
    elements.status.textContent = `Job ${jobId}: running`;
    elements.stages.innerHTML = "";
    elements.report.innerHTML = "";

    this.consumers.get(tab)?.close();
    const consumer = new EventLogConsumer(
      this.options.streamFactory ?? eventSourceFactory,
      (event) => {
        binding.stages.push(event.stage);
        const item = document.createElement("li");
        item.className = "stage-entry";
        item.textContent = event.detail
          ? `${event.stage} — ${event.detail}`
          : event.stage;
        elements.stages.appendChild(item);
      },
      () => void this.finishJob(tab, jobId),
      () => this.showError("Lost connection to the progress stream."),
      { reconnectDelayMs: this.options.reconnectDelayMs ?? 1000 },
    );
    this.consumers.set(tab, consumer);
    consumer.subscribe(this.client.eventsUrl(jobId));
  }

  private async finishJob(tab: Tab, jobId: string): Promise<void> {
    const elements = this.tabElements.get(tab)!;
    const binding = this.state.binding(tab);
    let state;
    try {
      state = await this.client.jobState(jobId);
    } catch (err) {
      this.showError(`Could not fetch job state: ${String(err)}`);
      return;
    }
    if (binding) binding.state = state.state;
    elements.status.textContent = `Job ${jobId}: ${state.state}`;
    if (state.state === "failed") {
      this.showError(
        `Evaluation failed: ${state.error ?? "unknown reason"}. Your draft is preserved.`,
      );
      return;
    }
    try {
      const report = await this.client.structuredReport(jobId);
      elements.report.innerHTML = "";
      elements.report.appendChild(renderReport(report, tab));
    } catch (err) {
      this.showError(`Could not fetch the report: ${String(err)}`);
    }
  }
}

export function mount(
  root: HTMLElement,
  client: ServiceClient,
  options: AppOptions = {},
): App {
  return new App(root, client, options);
}
