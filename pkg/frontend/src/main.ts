/** Browser entry point. The service address comes from `?service=` or the
 * header form; everything else is wiring. */

import { App } from "./app.js";
import { ServiceClient } from "./client.js";
import { DEFAULT_POLL_INTERVAL_MS, Poller } from "./poller.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8023";

function start(base: string): void {
  const client = new ServiceClient(base);
  const interval = Number(
    new URLSearchParams(location.search).get("interval") ?? DEFAULT_POLL_INTERVAL_MS,
  );
  const poller = new Poller(() => client.listInstances(), interval);
  new App(document, client, poller).mount();
}

const form = document.getElementById("service-form") as HTMLFormElement;
form.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const input = document.getElementById("service-url") as HTMLInputElement;
  const url = new URL(location.href);
  url.searchParams.set("service", input.value.trim());
  location.assign(url.toString()); // restart the app cleanly on the new address
});

start(
  new URLSearchParams(location.search).get("service") ?? DEFAULT_SERVICE,
);
