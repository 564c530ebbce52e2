import { ServiceClient } from "./api.js";
import { mount } from "./app.js";

const baseUrl =
  new URLSearchParams(window.location.search).get("service") ??
  "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root) {
  mount(root, new ServiceClient(baseUrl));
}
