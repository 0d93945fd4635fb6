import logging

logger = logging.getLogger(__name__)


def _valuation_line(v):
    return f"{v['label']}: Γ = {v['value_group']}, k = {v['residue_field']} [{', '.join(v['residue_flags'])}]"


def build_field_report(result):
    action = result["action"]
    logger.debug(f"🔍 Building field report for {result['field']}")

    if action == "chain":
        report = f"{len(result['chain'])} henselian valuations\n"
        report += f"\n=== COARSENINGS OF {result['field']} ===\n"
        for v in result["chain"]:
            report += f"• {_valuation_line(v)}\n"
        if result["truncated"]:
            report += "⚠️ chain truncated\n"
        return report

    if action == "classify":
        report = (", ".join(result["flags"]) or "no closure properties") + "\n"
        report += f"\n=== {result['field']} ===\n"
        return report

    if action == "canonical":
        v = result["valuation"]
        which = "canonical henselian" if result["prime"] is None else f"canonical {result['prime']}-henselian"
        report = f"{v['label']}\n"
        report += f"\n=== {which.upper()} VALUATION OF {result['field']} ===\n"
        report += f"{_valuation_line(v)}\n"
        return report

    if action == "dp":
        report = f"{'dp-minimal' if result['dp_minimal'] else 'not dp-minimal'}\n"
        report += f"\n=== {result['field']} ===\n{result['reason']}\n"
        return report

    report = f"{result['kind'].replace('_', ' ')}\n"
    if result["kind"] == "henselian":
        report += f"\n=== DEFINABLE VALUATION ON {result['field']} ===\n"
        report += f"{_valuation_line(result['canonical'])}\n"
        if "canonical_p" in result:
            report += f"p = {result['canonical_p']['p']}: {_valuation_line(result['canonical_p']['valuation'])}\n"
    return report
