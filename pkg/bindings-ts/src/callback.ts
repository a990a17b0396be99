/**
 * Callback oracles: serve JavaScript model/explainer functions to the CLI.
 *
 * The CLI only speaks to oracles through spawned commands exchanging NPY
 * files, so in-process callbacks are bridged with a loopback HTTP server plus
 * a tiny relay script: the CLI invokes `node relay.js <in> <out> <url>
 * [target]`, the relay POSTs the request array here, the callback runs in
 * this process, and the response array travels back through the relay.
 */

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import { writeFileSync } from "node:fs";
import { AddressInfo } from "node:net";
import { join } from "node:path";

import { decodeNpy, encodeNpy, NpyArray } from "./npy.js";
import { OracleBlock } from "./manifest.js";

export type PredictFn = (inputs: NpyArray) => NpyArray;
export type ExplainFn = (inputs: NpyArray, target: number) => NpyArray;

const RELAY_SOURCE = `
const { readFileSync, writeFileSync } = require("node:fs");
const [, , inPath, outPath, url, target] = process.argv;
const endpoint = target === undefined ? url : url + "?target=" + target;
fetch(endpoint, { method: "POST", body: readFileSync(inPath) })
  .then(async (res) => {
    const body = Buffer.from(await res.arrayBuffer());
    if (!res.ok) {
      process.stderr.write("oracle callback failed: " + body.toString());
      process.exit(1);
    }
    writeFileSync(outPath, body);
  })
  .catch((err) => {
    process.stderr.write(String(err));
    process.exit(1);
  });
`;

function readBody(req: IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

export class CallbackOracleServer {
  private server: Server | null = null;
  private url = "";

  constructor(
    private readonly callbacks: { predict?: PredictFn; explain?: ExplainFn; numClasses?: number },
  ) {}

  async start(): Promise<void> {
    this.server = createServer((req, res) => {
      void this.handle(req, res);
    });
    await new Promise<void>((resolve) => this.server!.listen(0, "127.0.0.1", resolve));
    const { port } = this.server.address() as AddressInfo;
    this.url = `http://127.0.0.1:${port}`;
  }

  private async handle(req: IncomingMessage, res: ServerResponse): Promise<void> {
    try {
      const body = await readBody(req);
      const url = new URL(req.url ?? "/", this.url);
      const inputs = decodeNpy(body);
      let out: NpyArray;
      if (url.pathname === "/predict" && this.callbacks.predict) {
        out = this.callbacks.predict(inputs);
      } else if (url.pathname === "/explain" && this.callbacks.explain) {
        out = this.callbacks.explain(inputs, Number(url.searchParams.get("target") ?? 0));
      } else {
        res.writeHead(404).end(`no callback for ${url.pathname}`);
        return;
      }
      res.writeHead(200, { "content-type": "application/octet-stream" });
      res.end(encodeNpy(out));
    } catch (err) {
      res.writeHead(500).end(String(err));
    }
  }

  /**
   * Write the relay script into `dir` and return a manifest oracle block
   * whose commands route through this server.
   */
  oracleBlock(dir: string): OracleBlock {
    if (!this.server) throw new Error("server not started");
    const relay = join(dir, "oracle_relay.cjs");
    writeFileSync(relay, RELAY_SOURCE);
    const block: OracleBlock = {};
    if (this.callbacks.predict) {
      block.model_command = `node ${relay} {input} {output} ${this.url}/predict`;
      block.num_classes = this.callbacks.numClasses;
    }
    if (this.callbacks.explain) {
      block.explainer_command = `node ${relay} {input} {output} ${this.url}/explain {target}`;
    }
    return block;
  }

  async stop(): Promise<void> {
    if (this.server) {
      await new Promise<void>((resolve, reject) =>
        this.server!.close((err) => (err ? reject(err) : resolve())),
      );
      this.server = null;
    }
  }
}
