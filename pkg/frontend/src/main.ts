/** Browser bootstrap: mount the console, wire clicks to commands. */

import { CommandPayload } from "./model.js";
import { ConsoleStore, GatewayClient } from "./gateway.js";
import { renderConsole } from "./render.js";

function commandFor(target: HTMLElement, root: HTMLElement): CommandPayload | null {
  switch (target.dataset.command) {
    case "mode-automatic":
      return { set_mode: "automatic" };
    case "mode-manual": {
      const select = root.querySelector<HTMLSelectElement>(".pattern-select");
      return { set_mode: "manual", pattern: select?.value ?? "central" };
    }
    case "fail":
      return target.dataset.uv ? { inject_failure: target.dataset.uv } : null;
    case "pause":
      return { set_pace: 0 };
    case "step":
      return { step: 1 };
    case "run-max":
      return { set_pace: "max" };
    default:
      return null;
  }
}

export function mount(root: HTMLElement, baseUrl: string): GatewayClient {
  const store = new ConsoleStore();
  const client = new GatewayClient(store, baseUrl);
  store.subscribe((state) => {
    root.innerHTML = renderConsole(state);
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const command = commandFor(target, root);
    if (command !== null) client.submit(command);
  });
  // Changing the selector while in manual mode re-requests the pattern;
  // while automatic the control is disabled and never fires.
  root.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.command === "pattern") {
      client.submit({ set_pattern: (target as HTMLSelectElement).value });
    }
    if (target.dataset.command === "pace") {
      client.submit({ set_pace: Number((target as HTMLInputElement).value) });
    }
  });

  root.innerHTML = renderConsole(store.state);
  client.connect();
  return client;
}

declare global {
  interface Window {
    uvfsimConsole?: GatewayClient;
  }
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root !== null) {
    const base = root.dataset.gateway ?? window.location.origin;
    window.uvfsimConsole = mount(root, base);
  }
}
