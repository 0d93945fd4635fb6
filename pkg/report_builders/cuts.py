import logging

logger = logging.getLogger(__name__)


def build_cut_report(result):
    action = result["action"]
    logger.debug(f"🔍 Building cut report for alpha = {result['alpha']}")

    header = f"\n=== CUT OF {result['alpha']} IN {result['field']} ===\n"
    header += f"gap = {result['gap']}, trunc = {result['trunc']}, excess {result['excess_sign']}\n"

    if action == "gap":
        return f"{result['gap']}\n" + header

    if action == "member":
        verdict = "member" if result["member"] else "not a member"
        return f"{result['x']} ∈ {result['kind']}: {verdict}\n" + header

    if action == "density":
        report = f"{result['verdict']}\n" + header
        report += "\n=== APPROXIMATIONS ===\n"
        for row in result["results"]:
            witness = f" (b = {row['b']})" if row.get("b") else ""
            report += f"• eps = {row['eps']}: {row['status']}{witness}\n"
        for v in result["violations"]:
            report += f"❌ {v}\n"
        return report

    report = f"{'passed' if result['passed'] else 'FAILED'}\n" + header
    report += "\n=== CUT VALUATION ===\n"
    report += f"A: {result['A_rule']} ({result['A_members']} of {result['samples']} samples)\n"
    report += f"O: {result['O_rule']} ({result['O_members']} of {result['samples']} samples)\n"
    report += f"O equals the natural valuation ring: {result['O_equals_natural_ring']}\n"
    report += f"value group {result['value_group']}, residue field {result['residue_field']}\n"
    for v in result["violations"][:10]:
        report += f"❌ {v['check']}: {v['detail']}\n"
    return report
