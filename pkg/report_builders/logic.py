import logging

logger = logging.getLogger(__name__)


def build_logic_report(result):
    logger.debug(f"🔍 Building logic report for {result['formula']}")

    if result["action"] == "decide":
        report = f"{'true' if result['decision'] else 'false'}\n"
        report += f"\n=== SENTENCE OVER {result['group']} ===\n{result['formula']}\n"
        return report

    report = f"{result['result']}\n"
    report += f"\n=== INPUT OVER {result['group']} ===\n{result['formula']}\n"
    if result["action"] == "normal":
        report += f"\n=== CONVEX LEAVES IN {result['variable']} ===\n"
        for leaf in result["convex_leaves"]:
            anchor = f" at {leaf['anchor']}" if leaf["anchor"] else ""
            report += f"• {leaf['shape']}{anchor}: {leaf['formula']}\n"
        if result["congruence_leaves"]:
            report += "\n=== CONGRUENCE LEAVES ===\n"
            for leaf in result["congruence_leaves"]:
                report += f"• {leaf}\n"
    return report
