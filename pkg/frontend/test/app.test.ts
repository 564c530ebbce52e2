import { beforeEach, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { mount } from "../src/app.js";
import { ViewState } from "../src/state.js";
import { ScriptedStream, StubService, recordedEvents, waitFor } from "./helpers.js";

function setup(service = new StubService(), stream = new ScriptedStream(recordedEvents())) {
  document.body.innerHTML = '<div id="app"></div>';
  window.localStorage.clear();
  const root = document.getElementById("app")!;
  const client = new ServiceClient("http://svc", service.fetch);
  const app = mount(root, client, {
    streamFactory: stream.factory,
    reconnectDelayMs: 1,
  });
  return { app, root, service, stream };
}

function draftArea(root: HTMLElement): HTMLTextAreaElement {
  return root.querySelector(".idea-draft")!;
}

describe("idea submission", () => {
  beforeEach(() => {
    window.localStorage.clear();
  });

  it("empty draft shows inline validation without any network call", async () => {
    const { app, root, service } = setup();
    await app.submitIdea("soundness");
    const banner = root.querySelector<HTMLDivElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toMatch(/enter a research idea/i);
    expect(service.fetchCalls).toBe(0);
  });

  it("unreachable service surfaces a banner and preserves the draft", async () => {
    const service = new StubService();
    service.unreachable = true;
    const { app, root } = setup(service);
    draftArea(root).value = "My idea text";
    draftArea(root).dispatchEvent(new Event("input"));
    await app.submitIdea("soundness");
    const banner = root.querySelector<HTMLDivElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toMatch(/draft is preserved/i);
    expect(draftArea(root).value).toBe("My idea text");
  });

  it("submits the active module and cutoff date", async () => {
    const { app, root, service } = setup();
    draftArea(root).value = "My idea text";
    draftArea(root).dispatchEvent(new Event("input"));
    const cutoff = root.querySelector<HTMLInputElement>(".cutoff-input")!;
    cutoff.value = "2024-06-01";
    cutoff.dispatchEvent(new Event("input"));
    await app.submitIdea("contribution");
    await waitFor(() => service.submissions.length === 1);
    expect(service.submissions[0]).toMatchObject({
      idea_text: "My idea text",
      cutoff_date: "2024-06-01",
      modules: ["contribution"],
    });
  });

  it("failed jobs surface the reason and keep the draft", async () => {
    const service = new StubService();
    service.jobState = "failed";
    service.error = "extraction produced nothing";
    const { app, root } = setup(service);
    draftArea(root).value = "My idea text";
    draftArea(root).dispatchEvent(new Event("input"));
    await app.submitIdea("soundness");
    await waitFor(() => {
      const banner = root.querySelector<HTMLDivElement>(".error-banner")!;
      return !banner.hidden && /extraction produced nothing/.test(banner.textContent ?? "");
    });
    expect(draftArea(root).value).toBe("My idea text");
  });
});

describe("draft persistence", () => {
  it("draft survives a page refresh via local storage", () => {
    window.localStorage.clear();
    const first = setup();
    draftArea(first.root).value = "Persistent idea";
    draftArea(first.root).dispatchEvent(new Event("input"));

    // Simulated refresh: new state and app over the same storage.
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    const client = new ServiceClient("http://svc", new StubService().fetch);
    mount(root, client, { state: new ViewState(window.localStorage) });
    expect(draftArea(root).value).toBe("Persistent idea");
  });
});

describe("tabs", () => {
  it("switching tabs shows the matching panel", () => {
    const { app, root } = setup();
    app.switchTab("contribution");
    const soundness = root.querySelector<HTMLDivElement>(".panel-soundness")!;
    const contribution = root.querySelector<HTMLDivElement>(".panel-contribution")!;
    expect(soundness.style.display).toBe("none");
    expect(contribution.style.display).toBe("");
  });

  it("tabs hold independent job bindings", async () => {
    const { app, root } = setup();
    draftArea(root).value = "My idea text";
    draftArea(root).dispatchEvent(new Event("input"));
    await app.submitIdea("soundness");
    await app.submitIdea("contribution");
    expect(app.state.binding("soundness")?.jobId).toBeDefined();
    expect(app.state.binding("contribution")?.jobId).toBeDefined();
    expect(app.state.binding("soundness")).not.toBe(app.state.binding("contribution"));
  });
});

describe("report rendering states", () => {
  it("zero contribution sections produce an empty-state message", async () => {
    const service = new StubService();
    service.report.contribution_sections = [];
    const { app, root } = setup(service);
    draftArea(root).value = "My idea text";
    draftArea(root).dispatchEvent(new Event("input"));
    await app.submitIdea("contribution");
    await waitFor(() =>
      root.querySelectorAll(".panel-contribution .empty-state").length > 0,
    );
    const empty = root.querySelector(".panel-contribution .empty-state")!;
    expect(empty.textContent).toMatch(/no contribution sections/i);
  });
});
