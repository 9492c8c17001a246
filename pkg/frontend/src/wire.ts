/** WebSocket client for the stepping service. */

import { Mailbox } from "./mailbox.js";
import {
  FieldMsg,
  ServerMsg,
  StateMsg,
  parseServerMessage,
} from "./protocol.js";

export interface WireEvents {
  onState?: (s: StateMsg) => void;
  onField?: (f: FieldMsg) => void;
  onError?: (code: string, message: string) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

export class Wire {
  private socket: WebSocket | null = null;
  private nextId = 1;
  readonly latestState = new Mailbox<StateMsg>();

  constructor(
    readonly url: string,
    private readonly events: WireEvents,
  ) {}

  connect(): void {
    this.socket = new WebSocket(this.url);
    this.socket.onmessage = (ev) => this.handle(String(ev.data));
    this.socket.onopen = () => this.events.onOpen?.();
    this.socket.onclose = () => this.events.onClose?.();
  }

  private handle(text: string): void {
    let msg: ServerMsg;
    try {
      msg = parseServerMessage(text);
    } catch {
      return;
    }
    if (msg.type === "state") {
      this.latestState.put(msg);
      this.events.onState?.(msg);
    } else if (msg.type === "field") {
      this.events.onField?.(msg);
    } else if (msg.type === "error") {
      this.events.onError?.(msg.code, msg.message);
    }
  }

  send(doc: Record<string, unknown>): void {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(doc));
    }
  }

  request(doc: Record<string, unknown>): number {
    const id = this.nextId++;
    this.send({ ...doc, id });
    return id;
  }

  close(): void {
    this.socket?.close();
  }
}

/** Build the service URL from the page's query parameters. */
export function serviceUrl(query: string): string {
  const params = new URLSearchParams(query);
  const host = params.get("host") ?? "127.0.0.1";
  const port = params.get("port") ?? "8732";
  return `ws://${host}:${port}/`;
}
