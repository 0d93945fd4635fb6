import logging

logger = logging.getLogger(__name__)


def build_perfectness_report(result):
    action = result["action"]
    logger.debug(f"🔍 Building perfectness report for {action}")

    if action == "pth":
        if result["is_pth_power"]:
            return f"({result['root']})^{result['p']}\n"
        return f"{result['f']} is not a {result['p']}-th power in F_{result['p']}(s)\n"

    if action == "tau":
        report = f"{result['value']}\n"
        report += f"\n=== τ(x, y) = x^{result['p']} + z·y^{result['p']} ===\n"
        report += f"x = {result['x']}, y = {result['y']}, z = {result['z']}\n"
        if result["z_is_pth_power"]:
            report += "⚠️ z is a p-th power, so τ is not injective\n"
        return report

    if action == "frobenius":
        report = f"{'additive and multiplicative' if result['passed'] else 'FAILED'}\n"
        report += f"\n=== FROBENIUS ON F_{result['p']}(s), {result['samples']} SAMPLES ===\n"
        for f, g in result["failures"][:5]:
            report += f"❌ f = {f}, g = {g}\n"
        return report

    collisions = result["collisions"]
    report = f"{len(collisions)} collisions\n"
    report += f"\n=== τ WITH z = {result['z']} OVER F_{result['p']}(s) ===\n"
    report += f"z is a p-th power: {result['z_is_pth_power']}"
    report += f" (root {result['root']})\n" if result["root"] else "\n"
    report += f"{result['samples']} samples, {result['distinct_inputs']} distinct inputs\n"
    for c in collisions[:5]:
        (x1, y1), (x2, y2) = c["inputs"]
        report += f"• τ({x1}, {y1}) = τ({x2}, {y2}) = {c['value']}\n"
    return report
