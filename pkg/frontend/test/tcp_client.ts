/** Headless protocol client over TCP (node), used by the integration tests. */

import * as net from "node:net";
import { FrameDecoder, ServerMsg, frameMessage, parseServerMessage } from "../src/protocol.js";

export class TcpClient {
  private socket!: net.Socket;
  private decoder = new FrameDecoder();
  private queue: ServerMsg[] = [];
  private waiters: Array<(msg: ServerMsg) => void> = [];

  async connect(port: number, host = "127.0.0.1"): Promise<ServerMsg> {
    this.socket = net.createConnection({ port, host });
    this.socket.on("data", (chunk) => {
      for (const text of this.decoder.push(chunk)) {
        const msg = parseServerMessage(text);
        const waiter = this.waiters.shift();
        if (waiter) waiter(msg);
        else this.queue.push(msg);
      }
    });
    await new Promise<void>((resolve, reject) => {
      this.socket.once("connect", resolve);
      this.socket.once("error", reject);
    });
    return this.recv();     // hello
  }

  send(doc: Record<string, unknown>): void {
    this.socket.write(frameMessage(doc));
  }

  recv(timeoutMs = 10_000): Promise<ServerMsg> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timeout waiting for message")),
        timeoutMs,
      );
      this.waiters.push((msg) => {
        clearTimeout(timer);
        resolve(msg);
      });
    });
  }

  async rpc(doc: Record<string, unknown>, id: number): Promise<ServerMsg> {
    this.send({ ...doc, id });
    for (let i = 0; i < 5000; i++) {
      const msg = (await this.recv()) as ServerMsg & { id?: number };
      if (msg.id === id) return msg;
    }
    throw new Error("reply not received");
  }

  close(): void {
    this.socket.destroy();
  }
}
