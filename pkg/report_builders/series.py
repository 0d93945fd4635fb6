import logging

logger = logging.getLogger(__name__)


def _violations(violations):
    lines = ""
    for name, items in violations.items():
        for item in items[:5]:
            lines += f"❌ {name}: {item}\n"
    return lines


def build_series_report(result):
    """Reports for the hahn and hensel commands; the first line is the headline value"""
    command, action = result["command"], result["action"]
    logger.debug(f"🔍 Building series report for {command} {action}")

    if command == "hensel":
        if action == "lift":
            cert = result["certificate"]
            report = f"{result['approximation']}\n"
            report += f"\n=== NEWTON LIFT OF {result['poly']} OVER {result['field']} ===\n"
            report += f"start: {result['start']}\n"
            report += f"iterations: {cert['iterations']}\n"
            report += f"v(f'(a)) = {cert['derivative_valuation']}\n"
            report += "v(f(a_k)): " + ", ".join(cert["residuals"]) + "\n"
            report += f"gap doubling: {'holds' if cert['doubling_holds'] else 'FAILED'}\n"
            return report
        if action == "check":
            report = f"{'Hensel form' if result['hensel_form'] else 'not in Hensel form'}\n"
            if result["residue_root"] is not None:
                report += f"\n=== RESIDUE ROOT ===\n{result['residue_root']}\n"
            return report
        report = f"{result['g']}\n"
        report += f"\n=== CONJUGATE FORM OF {result['minpoly']} ===\n"
        for j, coeff in enumerate(result["G"]):
            report += f"G_{j} = {coeff}\n"
        report += f"verified: {result['verified']}\n"
        report += f"J_G{tuple(result['jacobian_point'])} = {result['jacobian_value']}\n"
        if "no_rational_root" in result:
            report += f"\n=== g(c, Y) AT c = ({', '.join(result['c'])}) ===\n"
            report += "no rational root\n" if result["no_rational_root"] else "has a rational root\n"
        return report

    if action == "arith":
        return f"{result['result']}\n"
    if action == "val":
        report = f"{result['valuation']}\n"
        report += f"\n=== {result['series']} ===\n"
        report += f"leading coefficient: {result['leading']}\n"
        report += f"residue: {result['residue']}\n"
        return report
    if action == "compare":
        return f"{result['order']}\n"
    if action == "uniformity":
        report = f"{'uniform' if result['passed'] else 'NOT uniform'}\n"
        checked = result["checked"]
        report += f"\n=== BALL FAMILY OVER {result['field']} ===\n"
        report += f"{checked['pairs']} pairs, {checked['radii']} radii, {checked['triples']} triples\n"
        report += _violations(result["violations"])
        return report
    if action == "typev":
        report = f"{'duality holds' if result['duality'] else 'duality FAILED'}\n"
        report += f"\n=== {result['descriptor']} ===\n"
        report += f"v(X) ∈ {result['valuations']}\n"
        report += f"v(X⁻¹) ∈ {result['inverse_valuations']}\n"
        report += f"bounded: {result['bounded']} (bound {result['bound']})\n"
        report += f"inverse bounded away from 0: {result['inverse_bounded_away']} (gap {result['gap']})\n"
        return report

    report = f"{'closed' if result['closed'] else 'NOT closed'}\n"
    report += f"\n=== {result['a']} AND {result['b']} ===\n"
    report += f"v(A + B) ∈ {result['sum_bound']}\n"
    report += f"v(A · B) ∈ {result['product_bound']}\n"
    for failure in result["failures"][:5]:
        report += f"❌ {failure}\n"
    return report
