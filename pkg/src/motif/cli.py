"""Command-line entry point.

Data goes to stdout, diagnostics to stderr. Exit status is 0 on success, 1
on a domain error and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analyzer, control, dataset, evaluation, generators, render
from .config import load_config
from .dsl import format_description, parse_description
from .errors import ConfigError, MotifError
from .trajectory import Episode, Region, SceneObject, load_corpus, load_episode, save_episode

KINDS = ("line", "vertical-shaking", "horizontal-shaking", "circle", "arc", "wave", "detour")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _pair(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    return x, y


def _box(text: str) -> tuple[str, tuple[float, float, float, float]]:
    try:
        label, coords = text.split(":", 1)
        x0, y0, x1, y1 = (float(v) for v in coords.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LABEL:x0,y0,x1,y1 but got {text!r}") from None
    return label, (x0, y0, x1, y1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="motif", description="Trajectory motion descriptions: generate, judge, render, build data.")
    p.add_argument("--config", help="key=value config file (falls back to $MOTIF_CONFIG)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for corpus commands")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic episode")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--start", type=_pair)
    g.add_argument("--end", type=_pair)
    g.add_argument("--center", type=_pair)
    g.add_argument("--amplitude", type=float)
    g.add_argument("--frequency", type=int)
    g.add_argument("--radius", type=float)
    g.add_argument("--turn", choices=("clockwise", "counter-clockwise"))
    g.add_argument("--count", type=int)
    g.add_argument("--convexity", choices=("convex", "concave"))
    g.add_argument("--bulge", type=float)
    g.add_argument("--drift", type=float)
    g.add_argument("--drift-direction")
    g.add_argument("--obstacle", type=_box, help="LABEL:x0,y0,x1,y1 in unit-square units (detour)")
    g.add_argument("--side", choices=("left", "right"), default="right")
    g.add_argument("--clearance", type=float, default=0.05)
    g.add_argument("--noise", type=float, dest="noise_sigma")
    g.add_argument("--seed", type=int)
    g.add_argument("--size", type=int, default=480, help="canvas side in pixels")
    g.add_argument("--id", default="generated")
    g.add_argument("--task", default="move the object")
    g.add_argument("--category", default="synthetic")
    g.add_argument("--out", help="episode JSON path (default: stdout)")

    r = sub.add_parser("render", help="render an episode to PNG")
    r.add_argument("--episode", required=True)
    r.add_argument("--mode", choices=dataset.REPRESENTATIONS, default="keypoint")
    r.add_argument("--n", type=int, default=4, choices=sorted(render.STORYBOARD_GRIDS))
    r.add_argument("--out-dir", default=".")

    d = sub.add_parser("discriminate", help="judge one episode against a description")
    d.add_argument("--episode", required=True)
    d.add_argument("--description", help="defaults to the episode's own description")

    k = sub.add_parser("rank", help="rank a directory of episodes against a description")
    k.add_argument("--corpus", required=True)
    k.add_argument("--description", required=True)

    b = sub.add_parser("build-dataset", help="emit positive and mined negative samples as JSONL")
    b.add_argument("--corpus", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--n-neg", type=int, default=None)
    b.add_argument("--representation", choices=dataset.REPRESENTATIONS, default="keypoint")
    b.add_argument("--image-dir")

    e = sub.add_parser("evaluate", help="precision/recall of predictions against a dataset")
    e.add_argument("--dataset", required=True)
    e.add_argument("--predictions", required=True)

    f = sub.add_parser("refine", help="search generator parameters until the description is met")
    f.add_argument("--task", required=True)
    f.add_argument("--description", required=True)
    f.add_argument("--budget", type=int, default=25)
    f.add_argument("--theta-loop", type=float)

    q = sub.add_parser("predict", help="analytic predictions for every sample of a dataset")
    q.add_argument("--dataset", required=True)
    q.add_argument("--corpus", required=True)
    q.add_argument("--out", help="predictions JSONL path (default: stdout)")
    return p


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")


def cmd_generate(args, cfg) -> int:
    kind = args.kind.replace("-", "_")
    fields = ("n", "start", "end", "center", "amplitude", "frequency", "radius", "turn", "count", "convexity",
              "bulge", "drift", "drift_direction", "noise_sigma", "seed")
    overrides = {f: getattr(args, f) for f in fields if getattr(args, f) is not None}
    params = generators.GeneratorParams(**overrides)
    scene = ()
    if kind == "detour":
        if args.obstacle is None:
            raise UsageError("--kind detour needs --obstacle")
        label, box = args.obstacle
        obstacle = SceneObject(label, Region.box(*box))
        traj, ast = generators.gen_detour(params, obstacle=obstacle, side=args.side, clearance=args.clearance)
        scene = (SceneObject(label, obstacle.region.transformed(args.size)),)
    else:
        traj, ast = generators.GENERATORS[kind](params)
    ep = Episode(args.id, traj.transformed(args.size), args.task, format_description(ast), scene, args.category,
                 image_size=(args.size, args.size))
    if args.out:
        save_episode(ep, args.out)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        from .trajectory import episode_to_json
        _emit(episode_to_json(ep))
    return 0


def cmd_render(args, cfg) -> int:
    ep = load_episode(args.episode)
    out = Path(args.out_dir) / f"{ep.id}_{args.mode}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    dataset.render_episode(ep, args.mode, out, cfg, n_frames=args.n)
    sys.stdout.write(str(out) + "\n")
    return 0


def cmd_discriminate(args, cfg) -> int:
    ep = load_episode(args.episode)
    verdict = analyzer.discriminate_episode(ep, args.description, cfg)
    _emit(verdict.to_json())
    return 0


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_rank(args, cfg) -> int:
    episodes = load_corpus(args.corpus)
    if not episodes:
        raise MotifError(f"no episodes in {args.corpus}")
    ast = parse_description(args.description)
    scores = _map(lambda ep: analyzer.discriminate_episode(ep, ast, cfg).score, episodes, args.jobs)
    order = sorted(range(len(episodes)), key=lambda i: (-scores[i], i))
    for rank_no, i in enumerate(order, 1):
        _emit({"rank": rank_no, "episode_id": episodes[i].id, "score": round(scores[i], 6),
               "label": int(scores[i] >= cfg.theta)})
    return 0


def cmd_build_dataset(args, cfg) -> int:
    episodes = load_corpus(args.corpus)
    samples = dataset.build_dataset(episodes, args.out, args.n_neg, args.representation, args.image_dir, cfg,
                                    jobs=args.jobs)
    print(f"wrote {len(samples)} samples to {args.out}", file=sys.stderr)
    return 0


def cmd_evaluate(args, cfg) -> int:
    samples = dataset.load_dataset(args.dataset)
    preds = evaluation.join_predictions(samples, evaluation.load_predictions(args.predictions))
    report = evaluation.category_report(samples, preds)
    sys.stdout.write(report.format_table() + "\n")
    _emit(report.to_json())
    return 0


def cmd_refine(args, cfg) -> int:
    trace = control.refine(args.task, args.description, budget=args.budget, theta_loop=args.theta_loop, cfg=cfg)
    for row in trace.to_json_lines():
        _emit(row)
    return 0


def cmd_predict(args, cfg) -> int:
    samples = dataset.load_dataset(args.dataset)
    by_id = {ep.id: ep for ep in load_corpus(args.corpus)}
    missing = sorted({s.episode_id for s in samples} - set(by_id))
    if missing:
        raise MotifError(f"episodes missing from corpus: {', '.join(missing[:5])}")
    labels = _map(lambda s: analyzer.predict_label(by_id[s.episode_id], s.motion_description, cfg), samples,
                  args.jobs)
    lines = [json.dumps({"episode_id": s.episode_id, "description": s.motion_description, "label": y})
             for s, y in zip(samples, labels)]
    text = "".join(line + "\n" for line in lines)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "render": cmd_render,
    "discriminate": cmd_discriminate,
    "rank": cmd_rank,
    "build-dataset": cmd_build_dataset,
    "evaluate": cmd_evaluate,
    "refine": cmd_refine,
    "predict": cmd_predict,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"motif: error: {exc}", file=sys.stderr)
        return 2
    except MotifError as exc:
        print(f"motif: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
