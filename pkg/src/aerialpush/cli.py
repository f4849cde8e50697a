"""Command line: ``eval``, ``serve``, ``rollout`` and ``bench``.

Flags override values from ``--config``; anything left unset keeps the
config file's (or the built-in) default.
"""

import argparse
import json
import logging
import sys

from .config import ConfigError, load_settings

log = logging.getLogger("aerialpush")


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _address(text):
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="aerialpush", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI file with parameter sections")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate an agent across friction values, print CSV")
    e.add_argument("--agent", choices=("scripted", "mppi", "hover"))
    e.add_argument("--frictions", type=_floats, help="comma-separated friction values")
    e.add_argument("--episodes", type=int, help="episodes per friction value")
    e.add_argument("--goal-mode", choices=("alternating", "random"))
    e.add_argument("--seed", type=int)
    e.add_argument("--max-steps", type=int)
    e.add_argument("--workers", type=int, help="worker processes")
    e.add_argument("-o", "--output", help="write CSV here instead of stdout")

    s = sub.add_parser("serve", help="NDJSON session over stdio or TCP")
    s.add_argument("--tcp", type=_address, metavar="HOST:PORT", help="listen on a socket instead of stdio")
    s.add_argument("--once", action="store_true", help="exit after the first TCP session")
    s.add_argument("--n-envs", type=int)
    s.add_argument("--seed", type=int, help="default seed for reset requests without one")
    s.add_argument("--workers", type=int, help="physics threads")
    s.add_argument("--depth", choices=("none", "base64", "file"))
    s.add_argument("--depth-dir")

    r = sub.add_parser("rollout", help="run one episode and export its trajectory CSV")
    r.add_argument("--agent", choices=("scripted", "mppi", "hover"))
    r.add_argument("--friction", type=float, default=None)
    r.add_argument("--goal-mode", choices=("alternating", "random"))
    r.add_argument("--seed", type=int)
    r.add_argument("--max-steps", type=int)
    r.add_argument("-o", "--output", help="write CSV here instead of stdout")

    b = sub.add_parser("bench", help="throughput of the active kernel backend")
    b.add_argument("--n-envs", type=int, default=32)
    b.add_argument("--steps", type=int, default=200)
    b.add_argument("--workers", type=int, default=1)
    return p


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_eval(args, settings):
    from .harness import export_csv, run_eval, summary_line

    settings = settings.override(
        "eval", agent=args.agent, friction_values=args.frictions, episodes_per_value=args.episodes,
        goal_mode=args.goal_mode, seed=args.seed, max_steps=args.max_steps, workers=args.workers,
    )
    rows = run_eval(settings.eval_config())
    for row in rows:
        log.info(summary_line(row))
    _write(export_csv(rows), args.output)
    return 0


def cmd_serve(args, settings):
    from .protocol import serve_stdio, serve_tcp

    settings = settings.override("batch", n_envs=args.n_envs, base_seed=args.seed, workers=args.workers)
    settings = settings.override("serve", depth=args.depth, depth_dir=args.depth_dir)
    if settings.serve.depth != "none":
        settings = settings.override("camera", enabled=True)
    cfg = settings.batch_config()
    depth, depth_dir = settings.serve.depth, settings.serve.depth_dir
    if args.tcp:
        host, port = args.tcp
        serve_tcp(host, port, cfg, depth, depth_dir, once=args.once,
                  ready=lambda addr: log.info("listening on %s:%d", *addr))
    else:
        serve_stdio(cfg, depth, depth_dir)
    return 0


def cmd_rollout(args, settings):
    from .harness import export_trajectory, rollout

    settings = settings.override("eval", agent=args.agent, goal_mode=args.goal_mode, seed=args.seed,
                                 max_steps=args.max_steps)
    e = settings.eval
    friction = args.friction if args.friction is not None else settings.scene.friction_mu
    ep = rollout(e.agent, friction, e.seed, e.goal_mode, e.max_steps, settings.scene, settings.scripted,
                 settings.mppi)
    log.info("goals=%d steps=%d reward=%.3f reason=%s", ep.stats.goals_completed, ep.stats.steps,
             ep.stats.total_reward, ep.stats.reset_reason.value)
    _write(export_trajectory(ep.log), args.output)
    return 0


def cmd_bench(args, settings):
    from .bench import run_all

    result = run_all(args.n_envs, args.steps, args.workers)
    print(json.dumps(result, indent=2))
    return 0


COMMANDS = {"eval": cmd_eval, "serve": cmd_serve, "rollout": cmd_rollout, "bench": cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"aerialpush: error: {exc}", file=sys.stderr)
        return 2
