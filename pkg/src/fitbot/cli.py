"""Operator entry points: validate, chat, serve, eval, reformulate.

The chat REPL and the HTTP service drive the same Assistant, so a transcript
recorded in one is reproducible in the other (pin the reference time to make
system-entity turns stable).
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from dataclasses import dataclass

from . import reformulation, textprep
from .dialog import SessionState
from .engine import Assistant, resolve_reference_time
from .intents import ResolvedIntent
from .reformulation import UserProfile, load_catalog
from .skill import SkillError, load_skill, validate_skill


@dataclass
class EvalReport:
    total: int
    correct: int
    oos_predicted: int
    confusion: dict[tuple[str, str], int]

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _load_assistant(args) -> Assistant:
    skill = load_skill(args.skill)
    catalog = load_catalog(args.catalog) if getattr(args, "catalog", None) else None
    extra = textprep.read_wordlist(args.wordlist) if getattr(args, "wordlist", None) else None
    return Assistant(skill, catalog=catalog, extra_words=extra)


def cmd_validate(args) -> int:
    try:
        skill = load_skill(args.skill)
    except OSError as exc:
        return _fail(f"cannot read {args.skill}: {exc}", 2)
    except SkillError as exc:
        return _fail(f"invalid skill: {exc}", 1)
    warnings = validate_skill(skill)
    for warning in warnings:
        print(f"warning: {warning}")
    print(
        f"{skill.name}: {len(skill.intents)} intents, {len(skill.entities)} entities, "
        f"{len(skill.dialog_nodes)} dialog nodes - OK"
    )
    return 0


def _print_debug(turn) -> None:
    nlu = turn.nlu
    intents = " ".join(f"{p.intent}:{p.confidence:.3f}({p.source})" for p in nlu.intents)
    verdict = (
        f"IS({nlu.resolved.prediction.intent})"
        if nlu.resolved.is_in_scope
        else f"OOS({nlu.resolved.oos_reason})"
    )
    print(f"[debug] verdict: {verdict} intents: {intents or '-'}")
    if nlu.corrected_text is not None:
        print(f"[debug] corrected: {nlu.corrected_text}")
    if nlu.mentions:
        shown = " ".join(
            f"@{m.entity}={m.value_text()}[{m.start},{m.end}]({m.recognizer},{m.confidence:.2f})"
            for m in nlu.mentions
        )
        print(f"[debug] entities: {shown}")
    if turn.srq is not None:
        srq = turn.srq
        print(
            f"[debug] srq: task={srq.task_id} state={srq.task_state_index} "
            f"final={' '.join(srq.final_terms)}"
        )


def cmd_chat(args) -> int:
    try:
        assistant = _load_assistant(args)
    except OSError as exc:
        return _fail(f"cannot read input file: {exc}", 2)
    except SkillError as exc:
        return _fail(f"invalid skill: {exc}", 1)
    if args.reference_time:
        try:
            reference = dt.datetime.fromisoformat(args.reference_time)
        except ValueError:
            return _fail(f"bad --reference-time {args.reference_time!r}", 1)
    else:
        reference = dt.datetime.now().replace(microsecond=0)

    session = SessionState(session_id="repl")
    profile = UserProfile(user_id="local")
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            try:
                line = input("> ")
            except EOFError:
                break
        else:
            line = sys.stdin.readline()
            if not line:
                break
            line = line.rstrip("\n")
            print(f"> {line}")
        if not line.strip():
            continue
        try:
            turn = assistant.message(session, line, reference, profile)
        except textprep.InputTooLong as exc:
            print(f"(input skipped: {exc})", file=sys.stderr)
            continue
        session = turn.result.updated_session
        profile = turn.profile or profile
        for response in turn.result.responses:
            print(response)
        if args.debug:
            _print_debug(turn)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from . import stores
    from .service import create_app

    try:
        assistant = _load_assistant(args)
    except OSError as exc:
        return _fail(f"cannot read input file: {exc}", 2)
    except SkillError as exc:
        return _fail(f"invalid skill: {exc}", 1)
    if args.data_dir:
        session_store = stores.FileSessionStore(args.data_dir, ttl_seconds=args.session_ttl)
        profile_store = stores.FileProfileStore(args.data_dir)
    else:
        session_store = stores.InMemorySessionStore(ttl_seconds=args.session_ttl)
        profile_store = stores.InMemoryProfileStore()
    app = create_app(
        assistant,
        session_store,
        profile_store,
        cors_origins=args.cors_origin or None,
        webchat_dir=args.webchat_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def run_eval(assistant: Assistant, corpus_path) -> EvalReport:
    total = correct = oos_predicted = 0
    confusion: dict[tuple[str, str], int] = {}
    with open(corpus_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            text, _, expected = line.partition("\t")
            expected = expected.strip()
            tokens = textprep.tokenize(text)
            if assistant.skill.config.autocorrect_enabled:
                tokens = textprep.autocorrect(tokens, assistant.vocabulary)
            from .intents import resolve

            resolved: ResolvedIntent = resolve(tokens, assistant.intent_model, assistant.skill.config)
            predicted = resolved.prediction.intent if resolved.is_in_scope else "__oos__"
            total += 1
            if predicted == "__oos__":
                oos_predicted += 1
            if predicted == expected:
                correct += 1
            confusion[(expected, predicted)] = confusion.get((expected, predicted), 0) + 1
    return EvalReport(total=total, correct=correct, oos_predicted=oos_predicted, confusion=confusion)


def cmd_eval(args) -> int:
    try:
        assistant = _load_assistant(args)
        report = run_eval(assistant, args.corpus)
    except OSError as exc:
        return _fail(f"cannot read input file: {exc}", 2)
    except SkillError as exc:
        return _fail(f"invalid skill: {exc}", 1)
    print(f"total: {report.total}")
    print(f"correct: {report.correct}")
    print(f"accuracy: {report.accuracy:.4f}")
    print(f"oos_predicted: {report.oos_predicted}")
    print("confusion:")
    for (expected, predicted), count in sorted(report.confusion.items()):
        print(f"  {expected} -> {predicted}: {count}")
    return 0


def cmd_reformulate(args) -> int:
    import json

    try:
        catalog = load_catalog(args.catalog)
        with open(args.profile, encoding="utf-8") as fh:
            profile = reformulation.profile_from_json(json.load(fh))
    except OSError as exc:
        return _fail(f"cannot read input file: {exc}", 2)
    except (reformulation.CatalogError, KeyError, ValueError) as exc:
        return _fail(f"invalid input: {exc}", 1)
    terms = [t.normalized for t in textprep.tokenize(" ".join(args.query))]
    try:
        srq = reformulation.reformulate(
            terms,
            profile,
            catalog,
            None,
            args.stopwords.split(",") if args.stopwords else list(_default_stopwords()),
            args.expansion_k,
        )
    except reformulation.EmptyQuery:
        return _fail("query contains only stopwords", 1)
    task = catalog.task(srq.task_id)
    label = task.states[srq.task_state_index].label
    print(f"task: {srq.task_id} state: {srq.task_state_index} ({label})")
    print(f"original: {' '.join(srq.original_terms)}")
    if srq.expansion_terms:
        print("expansion:")
        for term in srq.expansion_terms:
            product = term.task_weight * term.profile_weight
            print(
                f"  {term.term} (task {term.task_weight:.2f} x profile "
                f"{term.profile_weight:.2f} = {product:.4f})"
            )
    else:
        print("expansion: none")
    print(f"final: {' '.join(srq.final_terms)}")
    return 0


def _default_stopwords():
    from .skill import DEFAULT_STOPWORDS

    return DEFAULT_STOPWORDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fitbot", description="fitness assistant engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a skill file")
    p.add_argument("skill")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("chat", help="line-oriented REPL")
    p.add_argument("skill")
    p.add_argument("--catalog")
    p.add_argument("--wordlist")
    p.add_argument("--debug", action="store_true")
    p.add_argument("--reference-time", help="ISO8601 instant for system entities")
    p.set_defaults(func=cmd_chat)

    # every serve flag falls back to a FITBOT_* environment variable
    env = os.environ
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--skill", default=env.get("FITBOT_SKILL"), required="FITBOT_SKILL" not in env)
    p.add_argument("--host", default=env.get("FITBOT_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(env.get("FITBOT_PORT", "8080")))
    p.add_argument(
        "--data-dir",
        default=env.get("FITBOT_DATA_DIR"),
        help="directory for file-backed session/profile stores",
    )
    p.add_argument(
        "--session-ttl", type=float, default=float(env.get("FITBOT_SESSION_TTL", "3600"))
    )
    p.add_argument("--catalog", default=env.get("FITBOT_CATALOG"))
    p.add_argument("--wordlist", default=env.get("FITBOT_WORDLIST"))
    p.add_argument(
        "--webchat-dir",
        default=env.get("FITBOT_WEBCHAT_DIR"),
        help="static directory served at /",
    )
    p.add_argument("--cors-origin", action="append")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="score a labeled corpus")
    p.add_argument("skill")
    p.add_argument("corpus")
    p.add_argument("--wordlist")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reformulate", help="print the SRQ for a query")
    p.add_argument("catalog")
    p.add_argument("profile")
    p.add_argument("query", nargs="+")
    p.add_argument("--expansion-k", type=int, default=3)
    p.add_argument("--stopwords", help="comma-separated override")
    p.set_defaults(func=cmd_reformulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
