"""Calibrate the three-detector setup to the measured rates and compare both counting models."""
import argparse

from splitspot import Scene, simulate_triple, summarize_rates
from splitspot.analysis import measured_record
from splitspot.counting import GateConfig, calibrate_triple, default_triple_detectors

ROWS = ("R_trig", "R_ctop", "R_cbot", "R_top", "R_bot", "R_triple_measured", "R_acc",
        "R_triple_true", "sigma_triple", "R_triple_semiclassical", "ratio_semiclassical_to_true")


def fmt(v):
    return "undefined" if v is None else f"{v:.5g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=20000.0, help="seconds of simulated acquisition")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scene = Scene.reference(l=4)
    gates = GateConfig()
    setup = calibrate_triple(scene, *default_triple_detectors(scene), gates=gates)
    print(f"pair rate {setup.pair_rate:.4g}/s; top eta {setup.top.quantum_efficiency:.4f}, "
          f"bottom eta {setup.bot.quantum_efficiency:.4f}")

    columns = {"measured": summarize_rates(measured_record(), gates.effective_window)}
    for model in ("semiclassical", "quantum"):
        rec = simulate_triple(model, scene, setup.trig, setup.top, setup.bot, setup.pair_rate, gates,
                              args.duration, args.seed)
        columns[model] = summarize_rates(rec, gates.effective_window)

    print(f"{'':<28}" + "".join(f"{name:>15}" for name in columns))
    for row in ROWS:
        print(f"{row:<28}" + "".join(f"{fmt(getattr(s, row)):>15}" for s in columns.values()))


if __name__ == "__main__":
    main()
