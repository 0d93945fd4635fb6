import logging

logger = logging.getLogger(__name__)


def build_group_report(result):
    """Plain-text report for the oag and galois commands"""
    logger.debug(f"🔍 Building group report for {result['command']} {result['action']}")

    if result["command"] == "galois":
        report = f"{result['descriptor']}\n"
        report += f"\n=== r_p FOR {result['group']} ===\n"
        for p, r in result["r_p"].items():
            report += f"• p = {p}: r_p = {r}\n"
        report += f"• other primes: r_p = {result['generic_r_p']}\n"
        return report

    action = result["action"]
    if action == "arith":
        report = f"{result['result']}\n"
        report += f"\n=== {result['op'].upper()} IN {result['group']} ===\n"
        report += f"x = {result['x']}\n"
        if result.get("y"):
            report += f"y = {result['y']}\n"
        return report

    if action == "h":
        report = f"{result['subgroup'] if result['defined'] else 'undefined'}\n"
        report += f"\n=== H_{result['prime']}({result['element']}) ===\n"
        if not result["defined"]:
            report += f"{result['element']} lies in {result['prime']}Γ\n"
        return report

    if action == "profile":
        report = f"{'dp-minimal' if result['dp_minimal'] else 'not dp-minimal'}\n"
        report += f"\n=== INDEX TABLE FOR {result['group']} ===\n"
        for p, row in result["indices"].items():
            report += f"• p = {p}: |Γ/pΓ| = {row['index']}, r_p = {row['r_p']}\n"
        if result["witness_prime"] is not None:
            report += f"Singular at p = {result['witness_prime']}\n"
        return report

    report = f"{result['group']}: |Γ/{result['prime']}Γ| = {result['index']}\n"
    report += "\n=== INVARIANTS ===\n"
    report += f"r_{result['prime']} = {result['r_p']}\n"
    report += f"non-singular: {result['non_singular']}"
    if result["witness_prime"] is not None:
        report += f" (witness p = {result['witness_prime']})"
    report += "\n"
    report += "\n=== CONVEX SUBGROUPS ===\n"
    report += " ⊋ ".join(result["chain"]) + "\n"
    if result["S_p"] is not None:
        report += f"\n=== S_{result['prime']} ===\n"
        for row in result["S_p"]:
            report += f"• {row['subgroup'] or '∞'}: {row['representative']}\n"
    return report
