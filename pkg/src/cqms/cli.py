"""Command-line interface.

Every subcommand drives the same Engine the HTTP service uses and prints
its payload through the same serializer, so a CLI invocation and the
equivalent API call produce byte-identical JSON. Exit codes: 0 success,
1 user error (bad arguments, bad input, not found), 2 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CqmsError
from .service import Engine, ServiceConfig, serve, to_json
from .store import Principal


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> _Parser:
    parser = _Parser(prog="cqms", description="query log management")
    parser.add_argument("--store", help="store directory (default: $CQMS_STORE or ./cqms-store)")
    parser.add_argument("--config", help="service config JSON file")
    parser.add_argument("--principal", default="admin", help="acting user")
    parser.add_argument("--groups", default="", help="comma-separated groups")
    parser.add_argument("--pretty", action="store_true", help="indent output")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="ingest newline-delimited JSON log records")
    p.add_argument("file")
    p.add_argument("--schema", help="schema JSON file to apply first")

    p = sub.add_parser("search", help="run a meta-query")
    p.add_argument("metaquery", nargs="?", help="meta-query JSON")
    p.add_argument("--keyword", nargs="+", help="keyword search tokens")
    p.add_argument("--partial", help="partial query text")
    p.add_argument("--limit", type=int)

    p = sub.add_parser("suggest", help="completions for a partial query")
    p.add_argument("--partial", required=True)
    p.add_argument("--kind", choices=["relation", "attribute"])
    p.add_argument("--limit", type=int, default=10)

    p = sub.add_parser("sessions", help="session graph for a user")
    p.add_argument("user")

    p = sub.add_parser("similar", help="nearest stored queries")
    p.add_argument("qid", type=int)
    p.add_argument("-k", type=int, default=10)

    sub.add_parser("mine", help="segment sessions and rebuild the suggestion model")
    sub.add_parser("maintain", help="re-validate flags against the current schema")

    p = sub.add_parser("annotate", help="attach a note to a query")
    p.add_argument("qid", type=int)
    p.add_argument("--text", required=True)
    p.add_argument("--span", nargs=2, type=int, metavar=("START", "END"))

    p = sub.add_parser("delete", help="delete an owned query")
    p.add_argument("qid", type=int)

    p = sub.add_parser("access", help="change an owned query's visibility")
    p.add_argument("qid", type=int)
    p.add_argument("--visibility", required=True, choices=["private", "group", "public"])

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--interval-ms", type=int)

    return parser


def _store_path(args, config: ServiceConfig) -> str:
    if args.store:
        return args.store
    env = os.environ.get("CQMS_STORE")
    if env:
        return env
    return config.store_path


def _principal(args) -> Principal:
    groups = [g.strip() for g in (args.groups or "").split(",") if g.strip()]
    return Principal.of(args.principal, groups)


def _run(args, engine: Engine, principal: Principal):
    cmd = args.command
    if cmd == "ingest":
        if args.schema:
            with open(args.schema, encoding="utf-8") as fh:
                engine.add_schema(json.load(fh), principal)
        with open(args.file, encoding="utf-8") as fh:
            return engine.add_batch(fh.read().splitlines(), principal)
    if cmd == "search":
        if args.keyword:
            body = {"type": "keyword", "tokens": args.keyword}
        elif args.partial is not None:
            body = {"partial": args.partial}
        elif args.metaquery:
            body = json.loads(args.metaquery)
        else:
            raise _UsageError("search needs a meta-query, --keyword, or --partial")
        if args.limit is not None:
            body["limit"] = args.limit
        return engine.search(body, principal)
    if cmd == "suggest":
        return engine.suggest(args.partial, principal, kind=args.kind, limit=args.limit)
    if cmd == "sessions":
        return engine.sessions(args.user, principal)
    if cmd == "similar":
        return engine.similar(principal, qid=args.qid, k=args.k)
    if cmd == "mine":
        return engine.run_mine()
    if cmd == "maintain":
        return engine.run_maintain()
    if cmd == "annotate":
        body = {"qid": args.qid, "text": args.text}
        if args.span:
            body["span"] = args.span
        return engine.annotate(body, principal)
    if cmd == "delete":
        return engine.delete_query(args.qid, principal)
    if cmd == "access":
        return engine.set_access(args.qid, args.visibility, principal)
    raise _UsageError("unknown command %r" % cmd)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        config = ServiceConfig.load(args.config) if args.config else ServiceConfig()
    except (OSError, ValueError) as exc:
        print(to_json({"error": str(exc)}), file=sys.stderr)
        return 1
    store_path = _store_path(args, config)

    if args.command == "serve":
        overrides = {}
        if args.host:
            overrides["listen_host"] = args.host
        if args.port:
            overrides["listen_port"] = args.port
        if args.interval_ms:
            overrides["miner_interval_ms"] = args.interval_ms
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
        try:
            serve(config, store_path)
            return 0
        except CqmsError as exc:
            print(to_json({"error": str(exc)}), file=sys.stderr)
            return 2

    try:
        engine = Engine(store_path, config)
    except CqmsError as exc:
        print(to_json({"error": str(exc)}), file=sys.stderr)
        return 1 if exc.status < 500 else 2
    except Exception as exc:  # noqa: BLE001 - a store that will not open is internal
        print(to_json({"error": repr(exc)}), file=sys.stderr)
        return 2
    try:
        payload = _run(args, engine, _principal(args))
        print(to_json(payload, pretty=args.pretty))
        return 0
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except CqmsError as exc:
        print(to_json({"error": str(exc)}), file=sys.stderr)
        return 1 if exc.status < 500 else 2
    except (OSError, ValueError) as exc:
        print(to_json({"error": str(exc)}), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 2
        print(to_json({"error": repr(exc)}), file=sys.stderr)
        return 2
    finally:
        engine.close()


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
