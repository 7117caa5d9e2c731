// Browser bootstrap: wire the app to the real DOM, canvas and audio.

import { ApiClient } from "./api.js";
import { App } from "./app.js";
import { BrowserAudio } from "./audio.js";
import { CanvasPainter } from "./render.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const app = new App({
  api: new ApiClient(""),
  audio: new BrowserAudio(window),
  doc: document,
  root,
  makePainter: (canvas) => {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("canvas 2d context unavailable");
    }
    return new CanvasPainter(ctx);
  },
});

document.addEventListener("keydown", (event) => {
  if ((event.target as HTMLElement | null)?.tagName === "INPUT") {
    return;
  }
  if (app.handleKey(event.key)) {
    event.preventDefault();
  }
});

const form = document.getElementById("search-form") as HTMLFormElement | null;
const input = document.getElementById("search-input") as HTMLInputElement | null;
form?.addEventListener("submit", (event) => {
  event.preventDefault();
  const query = input?.value ?? "";
  if (query.trim()) {
    void app.submitSearch(query);
  }
});

const buttons: Array<[string, string]> = [
  ["btn-back", "Back"],
  ["btn-audio", "ToggleAudio"],
  ["btn-video", "ToggleVideo"],
  ["btn-share", "Share"],
  ["btn-up", "Up"],
  ["btn-down", "Down"],
  ["btn-select", "Select"],
];
for (const [id, type] of buttons) {
  document.getElementById(id)?.addEventListener("click", () => void app.dispatch({ type }));
}

void app.start();
