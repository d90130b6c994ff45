/** Shared test utilities: fixture loading and a small XML sanity check. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf8")) as T;
}

/** Checks that every opened tag is closed in order. Throws on the
 * first imbalance; returns the number of elements seen. */
export function assertWellFormed(svg: string): number {
  const stack: string[] = [];
  let count = 0;
  const re = /<(\/?)([a-zA-Z][\w:-]*)((?:"[^"]*"|'[^']*'|[^>"'])*)>/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(svg)) !== null) {
    const closing = m[1] === "/";
    const name = m[2];
    const selfClosed = m[3].endsWith("/");
    if (closing) {
      const open = stack.pop();
      if (open !== name) {
        throw new Error(`mismatched </${name}> at ${m.index}, expected </${open}>`);
      }
    } else if (!selfClosed) {
      stack.push(name);
      count += 1;
    } else {
      count += 1;
    }
  }
  if (stack.length > 0) throw new Error(`unclosed tags: ${stack.join(", ")}`);
  if (count === 0) throw new Error("no elements found");
  return count;
}

/** RGB channels of a #rrggbb string. */
export function rgb(hex: string): [number, number, number] {
  return [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
}

export interface FakeRoute {
  match: (path: string) => boolean;
  status?: number;
  body: unknown;
}

/** fetch stand-in serving canned bodies; unmatched paths get a 404. */
export function fakeFetch(routes: FakeRoute[]) {
  return (url: string) => {
    const route = routes.find((r) => r.match(url));
    if (route === undefined) {
      return Promise.resolve({
        ok: false,
        status: 404,
        json: () => Promise.resolve({ code: "not_found", message: `no route for ${url}` }),
      });
    }
    const status = route.status ?? 200;
    return Promise.resolve({
      ok: status >= 200 && status < 300,
      status,
      json: () => Promise.resolve(JSON.parse(JSON.stringify(route.body))),
    });
  };
}
