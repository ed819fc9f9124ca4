import { ApiClient } from "./client.js";
import { ReviewController, keyToAction } from "./controller.js";
import { KEY_HELP, renderPairPanel, renderStatusBar } from "./render.js";

/** DOM glue: binds the controller to the page. All logic lives in the
 *  controller and friends; this file only moves strings and URLs around. */
export function mountApp(root: HTMLElement, baseUrl = ""): ReviewController {
  root.innerHTML = `
    <header id="status-bar"></header>
    <main>
      <figure><img id="pair-image" alt="pair view" /></figure>
      <aside id="pair-panel"></aside>
    </main>
    <footer>
      <textarea id="note" rows="2" placeholder="review note (press i to focus, Esc to leave)"></textarea>
      <div id="key-help">${KEY_HELP}</div>
    </footer>
  `;

  const statusBar = root.querySelector<HTMLElement>("#status-bar")!;
  const image = root.querySelector<HTMLImageElement>("#pair-image")!;
  const panel = root.querySelector<HTMLElement>("#pair-panel")!;
  const note = root.querySelector<HTMLTextAreaElement>("#note")!;

  const controller = new ReviewController(new ApiClient(baseUrl), {
    storage: window.localStorage,
  });

  const redraw = () => {
    statusBar.innerHTML = renderStatusBar(controller);
    panel.innerHTML = renderPairPanel(controller.current());
    const url = controller.imageUrl();
    if (url && image.src !== url) image.src = url;
    if (!url) image.removeAttribute("src");
  };
  controller.onChange(redraw);

  document.addEventListener("keydown", (event) => {
    if (event.target === note) {
      if (event.key === "Escape") note.blur();
      return;
    }
    const action = keyToAction(event.key);
    if (!action) return;
    event.preventDefault();
    switch (action.kind) {
      case "next":
        controller.next();
        break;
      case "previous":
        controller.previous();
        break;
      case "view":
        controller.setView(action.view);
        break;
      case "cycle":
        controller.cycleView(action.direction);
        break;
      case "blink":
        controller.toggleBlink();
        break;
      case "accept":
        void controller.decide("accept", note.value).then(() => (note.value = ""));
        break;
      case "reject":
        void controller.decide("reject", note.value).then(() => (note.value = ""));
        break;
      case "retry":
        void controller.retryPending();
        break;
      case "reload":
        void controller.load();
        break;
      case "focus-note":
        note.focus();
        break;
    }
  });

  void controller.load();
  return controller;
}

declare global {
  interface Window {
    rainforgeReview?: ReviewController;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.rainforgeReview = mountApp(document.getElementById("app")!);
}
