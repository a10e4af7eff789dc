// Static host for the dashboard plus a same-origin /api proxy to the
// governance service, so the browser needs no CORS setup. Responses
// stream through untouched, which keeps the long-poll event feed live.

import http from "node:http";
import { readFile } from "node:fs/promises";
import path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));
const port = Number(process.env.PORT ?? 8800);
const upstream = new URL(process.env.GOV_URL ?? "http://127.0.0.1:8025");

const staticFiles: Record<string, { file: string; type: string }> = {
  "/": { file: path.join(here, "..", "index.html"), type: "text/html; charset=utf-8" },
  "/app.js": { file: path.join(here, "app.js"), type: "text/javascript; charset=utf-8" },
};

function proxy(req: http.IncomingMessage, res: http.ServerResponse): void {
  const headers: http.OutgoingHttpHeaders = {};
  if (req.headers["content-type"]) headers["content-type"] = req.headers["content-type"];
  if (req.headers["x-actor"]) headers["x-actor"] = req.headers["x-actor"];
  const out = http.request(
    {
      hostname: upstream.hostname,
      port: upstream.port,
      path: req.url,
      method: req.method,
      headers,
    },
    (upstreamRes) => {
      res.writeHead(upstreamRes.statusCode ?? 502, {
        "content-type": upstreamRes.headers["content-type"] ?? "application/json",
      });
      upstreamRes.pipe(res);
    },
  );
  out.on("error", () => {
    res.writeHead(502, { "content-type": "application/json" });
    res.end(JSON.stringify({ error: "governance service unreachable" }));
  });
  req.pipe(out);
}

const server = http.createServer((req, res) => {
  const url = req.url ?? "/";
  if (url.startsWith("/api/")) {
    proxy(req, res);
    return;
  }
  const entry = staticFiles[url.split("?")[0]] ?? staticFiles["/"];
  readFile(entry.file)
    .then((body) => {
      res.writeHead(200, { "content-type": entry.type });
      res.end(body);
    })
    .catch(() => {
      res.writeHead(404, { "content-type": "text/plain" });
      res.end("not found");
    });
});

server.listen(port, () => {
  console.log(`dashboard on http://127.0.0.1:${port} -> service at ${upstream.origin}`);
});
