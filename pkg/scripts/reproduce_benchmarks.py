"""Run the benchmark presets (fig1: AGTS vs GTS, fig2: aAGTS vs aGTS, exp: inverted hold)
and print a one-line summary per controller.

    python scripts/reproduce_benchmarks.py --outdir results --figures fig1 fig2
"""
import argparse

from so3track.harness import FIGURES, reproduce


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", default="results")
    p.add_argument("--figures", nargs="+", default=sorted(FIGURES), choices=sorted(FIGURES))
    p.add_argument("--t-final", type=float, default=None, help="override every preset horizon")
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    for fig in args.figures:
        out = reproduce(fig, args.outdir, t_final=args.t_final, jobs=args.jobs)
        for mode, s in out.items():
            settle = s["time_to_threshold"]
            extra = ""
            if s["terminal_estimation_error"] is not None:
                extra = f" |dhat-Delta|={s['terminal_estimation_error']:.2e}"
            print(f"{fig:5s} {mode:6s} {s['branch']:8s} V0(0)={s['V0_initial']:.4f} level={s['roa_level']:.4f} "
                  f"|E_R(T)|={s['terminal_eR_norm']:.2e} settle={'never' if settle is None else f'{settle:.3f}s'}"
                  + extra)


if __name__ == "__main__":
    main()
