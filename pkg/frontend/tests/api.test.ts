import { createServer, type Server } from "node:http";
import type { AddressInfo } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError, MutationQueue } from "../src/api.js";

// Tiny canned gateway; just enough surface to exercise the client's
// success, error, and polling paths.
let server: Server;
let client: ApiClient;
let exportPolls = 0;

beforeAll(async () => {
  server = createServer((req, res) => {
    const send = (status: number, body: unknown) => {
      res.writeHead(status, { "content-type": "application/json" });
      res.end(JSON.stringify(body));
    };
    if (req.url === "/plugins") {
      send(200, { plugins: [{ name: "medpix", version: "1.0", description: "crawler" }] });
    } else if (req.url === "/collections/missing") {
      send(404, { error: { code: "unknown_collection", message: "no collection 'missing'" } });
    } else if (req.url === "/collections/locked/ops") {
      send(409, {
        error: { code: "conflict", message: "expected revision 3, store is at 4" },
      });
    } else if (req.url === "/exports/exp-0001") {
      exportPolls += 1;
      const status = exportPolls < 3 ? "running" : "done";
      send(200, {
        export: {
          id: "exp-0001",
          collection_id: "c",
          status,
          revision: 1,
          title: "T",
          error: null,
          manifest_identifier: status === "done" ? "CLAVY_MANIFEST0000000000000000" : null,
          byte_size: status === "done" ? 123 : null,
        },
      });
    } else {
      res.writeHead(500).end("boom");
    }
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  client = new ApiClient(`http://127.0.0.1:${port}`);
});

afterAll(() => {
  server.close();
});

describe("ApiClient", () => {
  it("unwraps list envelopes", async () => {
    const plugins = await client.plugins();
    expect(plugins.map((p) => p.name)).toEqual(["medpix"]);
  });

  it("surfaces gateway error codes as ApiError", async () => {
    const err = await client.collection("missing").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.code).toBe("unknown_collection");
    expect(err.message).toContain("missing");
  });

  it("maps 409 conflicts with their code", async () => {
    const err = await client.applyOps("locked", [{ op: "remove", element_id: "x" }]).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
  });

  it("keeps a readable error for non-JSON bodies", async () => {
    const err = await client.collection("whatever").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http_error");
    expect(err.status).toBe(500);
  });

  it("polls an export until it is done", async () => {
    const status = await client.waitForExport("exp-0001", 10);
    expect(status.status).toBe("done");
    expect(status.manifest_identifier).toMatch(/^CLAVY_MANIFEST\d{16}$/);
    expect(exportPolls).toBeGreaterThanOrEqual(3);
  });
});

describe("MutationQueue", () => {
  it("runs tasks strictly one after another", async () => {
    const queue = new MutationQueue();
    const order: string[] = [];
    const slow = queue.run(async () => {
      await new Promise((resolve) => setTimeout(resolve, 30));
      order.push("slow");
      return "a";
    });
    const fast = queue.run(async () => {
      order.push("fast");
      return "b";
    });
    expect(await Promise.all([slow, fast])).toEqual(["a", "b"]);
    expect(order).toEqual(["slow", "fast"]);
  });

  it("keeps accepting work after a task rejects", async () => {
    const queue = new MutationQueue();
    await expect(
      queue.run(async () => {
        throw new Error("nope");
      }),
    ).rejects.toThrow("nope");
    expect(await queue.run(async () => 42)).toBe(42);
  });
});
