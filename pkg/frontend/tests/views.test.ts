import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { ViewState } from "../src/views.js";
import { VIEWS } from "../src/types.js";
import { FakeScheduler, StubServer } from "./stub-server.js";

describe("view state", () => {
  it("defaults to the blend view", () => {
    expect(new ViewState(new FakeScheduler()).active).toBe("blend");
  });

  it("cycles through exactly the five views", () => {
    const state = new ViewState(new FakeScheduler());
    const seen = [state.active];
    for (let i = 0; i < 4; i += 1) seen.push(state.cycle(1));
    expect([...seen].sort()).toEqual([...VIEWS].sort());
    expect(state.cycle(1)).toBe("blend"); // full circle back to the default
    state.cycle(-1);
    expect(state.active).toBe("aligned");
  });

  it("blink alternates exactly rainy and aligned at the set interval", () => {
    const scheduler = new FakeScheduler();
    const state = new ViewState(scheduler);
    state.startBlink(500);
    expect(scheduler.activeCount).toBe(1);
    const seen = new Set<string>([state.displayed()]);
    for (let i = 0; i < 5; i += 1) {
      scheduler.tick();
      seen.add(state.displayed());
    }
    expect([...seen].sort()).toEqual(["aligned", "rainy"]);
    state.stopBlink();
    expect(scheduler.activeCount).toBe(0);
    expect(state.displayed()).toBe("blend"); // back to the selected view
  });

  it("selecting a view stops blink", () => {
    const scheduler = new FakeScheduler();
    const state = new ViewState(scheduler);
    state.toggleBlink(250);
    expect(state.blinking).toBe(true);
    state.set("diff");
    expect(state.blinking).toBe(false);
    expect(state.displayed()).toBe("diff");
  });

  it("diff view requests the view=diff endpoint URL", () => {
    const server = StubServer.fixture({ needs_review: 1 });
    const client = new ApiClient("http://stub.local", server.fetch);
    expect(client.imageUrl("pair000", "diff")).toBe(
      "http://stub.local/api/pairs/pair000/image?view=diff",
    );
  });
});
