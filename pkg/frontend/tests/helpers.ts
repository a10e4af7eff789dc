// Shared scaffolding: a configurable in-process stub of the governance
// service for unit tests, and a spawner for the real thing (CLI `serve`)
// for the parity suite.

import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { cpSync, mkdtempSync, readFileSync } from "node:fs";
import http from "node:http";
import net from "node:net";
import { tmpdir } from "node:os";
import path from "node:path";
import type { RegistryEventWire } from "../src/types";

// -- real service + CLI

export interface Workspace {
  dir: string;
  config: string;
}

/** Scaffold a workspace seeded with the showcase scenario registry. */
export function initWorkspace(roster = "dev1,dev2,sam"): Workspace {
  const dir = mkdtempSync(path.join(tmpdir(), "govdash-"));
  const result = spawnSync(
    "hybridgov",
    ["init", "--dir", dir, "--roster", roster, "--demo"],
    { encoding: "utf-8" },
  );
  if (result.status !== 0) {
    throw new Error(`init failed: ${result.stderr}`);
  }
  return { dir, config: path.join(dir, "hybridgov.yaml") };
}

/** Byte-identical copy, so two workspaces start from the same state. */
export function cloneWorkspace(source: Workspace): Workspace {
  const dir = mkdtempSync(path.join(tmpdir(), "govdash-"));
  cpSync(source.dir, dir, { recursive: true });
  return { dir, config: path.join(dir, "hybridgov.yaml") };
}

export function runCli(args: string[]): { status: number; stdout: string; stderr: string } {
  const result = spawnSync("hybridgov", args, { encoding: "utf-8" });
  return { status: result.status ?? -1, stdout: result.stdout, stderr: result.stderr };
}

/** All events in a workspace registry, header line excluded. */
export function readEvents(workspace: Workspace): RegistryEventWire[] {
  const raw = readFileSync(path.join(workspace.dir, "governance", "registry.jsonl"), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as RegistryEventWire & { kind: string })
    .filter((row) => row.kind !== "header");
}

export function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = net.createServer();
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as net.AddressInfo).port;
      probe.close(() => resolve(port));
    });
    probe.on("error", reject);
  });
}

export interface RunningService {
  url: string;
  stop: () => Promise<void>;
}

/** Spawn `hybridgov serve` on the workspace and wait for its health
 * check; the returned stop() kills it and waits for exit. */
export async function startService(workspace: Workspace): Promise<RunningService> {
  const port = await freePort();
  const proc: ChildProcess = spawn(
    "hybridgov",
    ["serve", "--config", workspace.config, "--host", "127.0.0.1", "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk) => (stderr += String(chunk)));
  const url = `http://127.0.0.1:${port}`;

  const deadline = Date.now() + 20_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`service exited early (${proc.exitCode}): ${stderr}`);
    }
    try {
      const response = await fetch(`${url}/api/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error(`service never became healthy: ${stderr}`);
    }
    await sleep(150);
  }

  return {
    url,
    stop: () =>
      new Promise<void>((resolve) => {
        proc.once("exit", () => resolve());
        proc.kill("SIGTERM");
        setTimeout(() => proc.kill("SIGKILL"), 3000).unref();
      }),
  };
}

export const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

// -- stub service

type Handler = (body: unknown, url: URL) => { status?: number; json: unknown };

export interface StubService {
  url: string;
  /** every write the stub received, in order */
  writes: { method: string; path: string; body: unknown; actor: string | undefined }[];
  lastEventId: number;
  appendEvent(partial: {
    kind: string;
    payload: Record<string, unknown>;
    actor?: string;
  }): RegistryEventWire;
  respond(method: string, pathname: string, handler: Handler): void;
  close(): Promise<void>;
}

/** Minimal fake of the service: canned routes plus a working long-poll
 * event feed. Tests register exact-path handlers for what they need. */
export async function startStub(): Promise<StubService> {
  const events: RegistryEventWire[] = [];
  const handlers = new Map<string, Handler>();
  const waiting: { after: number; respond: () => void }[] = [];
  const writes: StubService["writes"] = [];

  const eventsAfter = (after: number) => events.filter((e) => e.event_id > after);

  const server = http.createServer((req, res) => {
    const url = new URL(req.url ?? "/", "http://stub");
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      const text = Buffer.concat(chunks).toString("utf-8");
      const body = text ? JSON.parse(text) : undefined;
      const reply = (status: number, json: unknown) => {
        res.writeHead(status, { "content-type": "application/json" });
        res.end(JSON.stringify(json));
      };

      if (req.method === "GET" && url.pathname === "/api/events") {
        const after = Number(url.searchParams.get("after") ?? "0");
        const wait = Number(url.searchParams.get("wait") ?? "0");
        const ready = eventsAfter(after);
        if (ready.length > 0 || wait <= 0) {
          reply(200, { events: ready, last_event_id: stub.lastEventId });
          return;
        }
        const entry = {
          after,
          respond: () => reply(200, { events: eventsAfter(after), last_event_id: stub.lastEventId }),
        };
        waiting.push(entry);
        setTimeout(() => {
          const index = waiting.indexOf(entry);
          if (index >= 0) {
            waiting.splice(index, 1);
            entry.respond();
          }
        }, Math.min(wait, 5) * 1000).unref();
        return;
      }

      if (req.method !== "GET") {
        writes.push({
          method: req.method ?? "",
          path: url.pathname,
          body,
          actor: req.headers["x-actor"] as string | undefined,
        });
      }
      const handler = handlers.get(`${req.method} ${url.pathname}`);
      if (!handler) {
        reply(404, { error: `stub has no route for ${req.method} ${url.pathname}` });
        return;
      }
      const out = handler(body, url);
      reply(out.status ?? 200, out.json);
    });
  });

  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const port = (server.address() as net.AddressInfo).port;

  const stub: StubService = {
    url: `http://127.0.0.1:${port}`,
    writes,
    lastEventId: 0,
    appendEvent({ kind, payload, actor = "stub" }) {
      const event: RegistryEventWire = {
        event_id: ++stub.lastEventId,
        timestamp: new Date().toISOString(),
        actor,
        kind,
        payload,
      };
      events.push(event);
      while (waiting.length > 0) {
        waiting.shift()?.respond();
      }
      return event;
    },
    respond(method, pathname, handler) {
      handlers.set(`${method} ${pathname}`, handler);
    },
    close: () => new Promise<void>((resolve) => server.close(() => resolve())),
  };

  stub.respond("GET", "/api/health", () => ({
    json: {
      status: "ok",
      schema_version: 1,
      last_event_id: stub.lastEventId,
      current_cycle: 1,
    },
  }));

  return stub;
}

/** ApiClient fetch stand-in built from a plain map of canned responses;
 * for model tests that never need a socket. Keys look like
 * "POST /api/classifications". */
export function fakeFetch(
  routes: Record<
    string,
    (body: unknown, url: URL) => { status?: number; json?: unknown } | "unreachable"
  >,
  log?: { key: string; body: unknown; url: URL }[],
): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input), "http://fake");
    const method = init?.method ?? "GET";
    const key = `${method} ${url.pathname}`;
    const route = routes[key];
    if (!route) throw new Error(`fakeFetch has no route for ${key}`);
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    log?.push({ key, body, url });
    const out = route(body, url);
    if (out === "unreachable") throw new TypeError("fetch failed");
    return new Response(JSON.stringify(out.json ?? {}), {
      status: out.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
}
