#scripts/visualize_graph.py
"""Render the bipartite PPICOD graph of an instance file as interactive HTML."""
import argparse
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1]))

from pyvis.network import Network

from services.instance_service import PpicodInstance, load_instance, receiver_node, summary, to_bipartite
from services.experiment_service import format_fraction
from utils.logger import logger

RECEIVER_COLOR = "#FF6B6B"
MESSAGE_COLOR = "#4ECDC4"
LAYER_GAP = 300
NODE_GAP = 90

# lower rank (more preferred) draws a heavier edge
RANK_COLORS = ["#2E8B57", "#4682B4", "#DAA520", "#FF8C00", "#B22222"]


def build_ppicod_pyvis(inst: PpicodInstance, output_html: str = "ppicod_graph.html") -> Path:
    """Messages along the top, receivers along the bottom, edges labelled with preference ranks."""
    view = to_bipartite(inst)
    net = Network(height="800px", width="100%", notebook=False, directed=False, cdn_resources="remote")
    net.toggle_physics(False)

    for j in range(1, inst.m + 1):
        x = (j - (inst.m + 1) / 2) * NODE_GAP
        net.add_node(f"X{j}", label=f"X{j}", title=f"message {j}", color=MESSAGE_COLOR, shape="box", x=x, y=0)

    for i in inst.receivers():
        known = sorted(inst.side_info(i))
        x = (i - (inst.n + 1) / 2) * NODE_GAP
        net.add_node(
            receiver_node(i),
            label=f"r{i}",
            title=f"receiver {i}\nH = {known}",
            color=RECEIVER_COLOR,
            shape="circle",
            x=x,
            y=LAYER_GAP,
        )

    for i, j, w in view.edges():
        shade = RANK_COLORS[min(int(w) - 1, len(RANK_COLORS) - 1)] if w >= 1 else RANK_COLORS[0]
        net.add_edge(
            receiver_node(i),
            f"X{j}",
            label=format_fraction(w),
            title=f"P[{i},{j}] = {format_fraction(w)}",
            color=shade,
            width=max(1.0, 4.0 / float(w)),
        )

    out = Path(output_html)
    out.parent.mkdir(parents=True, exist_ok=True)
    net.write_html(str(out), notebook=False)
    logger.info(f"PPICOD graph with {inst.n} receivers and {inst.m} messages saved to {out.resolve()}")
    return out


def main():
    ap = argparse.ArgumentParser(description="Draw a PPICOD instance as an interactive bipartite graph.")
    ap.add_argument("instance", help="instance JSON file")
    ap.add_argument("--out", default="ppicod_graph.html")
    args = ap.parse_args()

    try:
        inst = load_instance(args.instance)
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"Cannot load instance: {e}")
        sys.exit(1)

    info = summary(inst)
    print("\n" + "=" * 60)
    print("INSTANCE")
    print("=" * 60)
    print(f"   Receivers n: {info['n']}")
    print(f"   Messages m:  {info['m']}")
    print(f"   Field q:     {info['q']}")
    print(f"   |H_i|:       {info['h']}")
    print("=" * 60)

    out = build_ppicod_pyvis(inst, args.out)
    print(f"Open {out.resolve()} in your browser to view the graph")


if __name__ == "__main__":
    main()
