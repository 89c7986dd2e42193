import { ApiClient } from "./api.js";
import { buildApp } from "./app.js";
import { apiBaseUrl } from "./config.js";

const root = document.getElementById("app");
if (root) {
  buildApp(root, new ApiClient(apiBaseUrl()));
}
