/** Entry point: wires the review service URL to the app shell. */

import { ReviewApi } from './api.js';
import { App } from './ui.js';

const DEFAULT_SERVICE = 'http://127.0.0.1:8000';

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get('service');
  return fromQuery !== null && fromQuery.length > 0 ? fromQuery : DEFAULT_SERVICE;
}

const root = document.getElementById('app');
if (root === null) {
  throw new Error('missing #app element');
}
const app = new App(root, new ReviewApi(serviceUrl()));
void app.start();
