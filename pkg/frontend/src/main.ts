// Browser entry point. The service URL comes from ?service=... or defaults
// to the page origin.

import { CdssClient } from "./api";
import { init } from "./app";

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get("service") ?? window.location.origin;
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
init(root, new CdssClient(serviceUrl)).catch((error) => {
  root.textContent = `failed to reach the diagnosis service at ${serviceUrl}: ${error}`;
});
