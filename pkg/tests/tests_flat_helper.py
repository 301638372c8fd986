from fractions import Fraction

from petrov3.builder import SolutionData, assemble_metric
from petrov3.exactfield import Poly


def flat_reference_data() -> SolutionData:
    zero = Poly({}, 4)
    return SolutionData(K=Fraction(0), lambda_cc=zero, lambda_ca=zero, lambda_aa=zero,
                        mu_cc=zero, mu_ca=zero, mu_aa=zero, omega_cq=zero,
                        omega_aq=zero, r_override=Fraction(0))


def flat_reference_metric():
    return assemble_metric(flat_reference_data())
