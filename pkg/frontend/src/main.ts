import { createApp } from './app.js';

// Worker identity comes from the page URL (?worker=w123); the service is
// expected to serve this page itself, so the API lives on the same origin.
window.addEventListener('DOMContentLoaded', () => {
  const root = document.getElementById('app') as HTMLElement;
  const worker = new URLSearchParams(window.location.search).get('worker') ?? '';
  if (!worker) {
    root.textContent = 'Missing worker id: open this page as …/?worker=<your id>.';
    return;
  }
  document.title = `Annotation — ${worker}`;
  void createApp({ root, base: '', worker }).start();
});
