"""Published reference values used by the table replication and the acceptance suite.

Operating characteristics: i.i.d. N(0, 1) pre-change data (mu_pre = 0,
lambda_pre = 0), post-change drift 1 and correlation ``lambda0``.

ADD table: pre-change correlation ``lambda_pre``, post-change correlation
``lambda0``. The drifts are not printed with that table; mu_pre = 0 and
mu_post = 1 are assumed, as everywhere else in the same study.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

GAMMAS = (50, 100, 500, 1000, 5000, 10000)
OC_LAMBDA0 = (0.9, 0.5, 0.01, 0.0)
ADD_LAMBDA_PRE = (0.0, -0.5, 0.5)
ADD_LAMBDA0 = (0.01, 0.5, 0.9)
ADD_THRESHOLDS = (100, 200, 300, 400)
MU_PRE = 0.0
MU_POST = 1.0


@dataclass(frozen=True)
class OcCell:
    detector: str
    lambda0: float
    gamma: int
    threshold: float
    arl: float
    arl_se: float
    sadd: float
    sadd_se: float


@dataclass(frozen=True)
class AddCell:
    detector: str
    lambda_pre: float
    lambda0: float
    threshold: float
    add0: float
    add_inf: float


# (detector, lambda0) -> rows of (A, ARL, se, SADD, se), one per gamma
_OC = {
    ("cusum", 0.9): [
        (5.65, 49.81, 0.04, 2.7995, 0.0015), (9.875, 100.31, 0.07, 3.0575, 0.0016),
        (39.5, 499.58, 0.35, 3.4895, 0.0017), (73.9, 999.64, 0.71, 3.6493, 0.0017),
        (324.4, 4999.95, 3.54, 3.9920, 0.0018), (618.8975, 10000.31, 7.07, 4.1264, 0.0019)],
    ("sr", 0.9): [
        (14.15, 49.99, 0.03, 2.9775, 0.0014), (25.8, 99.93, 0.07, 3.1811, 0.0015),
        (107.875, 499.79, 0.35, 3.5841, 0.0017), (202.235, 1000.71, 0.71, 3.7438, 0.0017),
        (885.9, 5000.99, 3.53, 4.0737, 0.0018), (1685.935, 9999.93, 7.07, 4.2039, 0.0018)],
    ("cusum", 0.5): [
        (6.575, 50.02, 0.04, 3.2926, 0.0020), (11.9, 99.65, 0.07, 3.7446, 0.0022),
        (53.25, 500.35, 0.35, 4.6894, 0.0026), (103.25, 999.65, 0.71, 5.0794, 0.0028),
        (492.75, 5000.60, 3.54, 5.9552, 0.0032), (971.2, 10000.97, 7.07, 6.3127, 0.0033)],
    ("sr", 0.5): [
        (18.5, 50.12, 0.03, 3.5868, 0.0019), (35.35, 99.71, 0.07, 4.0039, 0.0021),
        (164.1, 499.96, 0.35, 4.9385, 0.0026), (320.45, 1000.04, 0.70, 5.3144, 0.0028),
        (1532.925, 4998.86, 3.53, 6.1772, 0.0032), (3024.18, 10002.44, 7.07, 6.5323, 0.0033)],
    ("cusum", 0.01): [
        (9.185, 49.94, 0.05, 4.8373, 0.0031), (17.164, 99.99, 0.07, 6.0403, 0.0026),
        (80.1035, 500.19, 0.35, 9.0262, 0.0050), (158.5061, 1000.40, 0.70, 10.3655, 0.0054),
        (783.25, 4999.07, 3.53, 13.4867, 0.0065), (1563.1025, 9999.14, 7.07, 14.8425, 0.0069)],
    ("sr", 0.01): [
        (27.4112, 49.97, 0.03, 5.3853, 0.0027), (55.0144, 99.70, 0.07, 6.6115, 0.0033),
        (278.0016, 500.75, 0.35, 9.6433, 0.0046), (555.2155, 999.95, 0.70, 10.9817, 0.0051),
        (2776.75, 4999.74, 3.53, 14.1190, 0.0062), (5553.05, 9999.47, 7.06, 15.4596, 0.0066)],
    ("cusum", 0.0): [
        (9.2412, 49.97, 0.03, 4.8471, 0.0031), (17.25, 99.92, 0.07, 6.0554, 0.0037),
        (80.5, 499.99, 0.35, 9.1504, 0.0050), (159.125, 1000.07, 0.70, 10.3719, 0.0055),
        (788.5, 5000.90, 3.53, 13.7190, 0.0066), (1573.15, 10000.96, 7.06, 15.0838, 0.0070)],
    ("sr", 0.0): [
        (27.55, 50.00, 0.03, 5.4281, 0.0028), (55.75, 100.25, 0.07, 6.6911, 0.0033),
        (279.0, 499.01, 0.35, 9.7689, 0.0046), (559.0, 999.58, 0.70, 11.1363, 0.0051),
        (2801.0, 5000.46, 3.53, 14.3394, 0.0062), (5607.005, 10000.88, 7.05, 15.7182, 0.0066)],
}

# (lambda_pre, lambda0) -> rows of (A, CUSUM ADD_0, CUSUM ADD_inf, SR ADD_0, SR ADD_inf)
_ADD = {
    (0.0, 0.01): [(100, 9.4794, 8.7804, 7.7031, 6.3756), (200, 10.8089, 10.1006, 9.0141, 7.6100),
                  (300, 11.6191, 10.8822, 9.8014, 8.3579), (400, 12.1713, 11.4335, 10.3568, 8.8858)],
    (0.0, 0.5): [(100, 5.0596, 4.8889, 4.6441, 4.1965), (200, 5.4508, 5.2807, 5.0438, 4.6122),
                 (300, 5.6700, 5.5059, 5.2674, 4.8460), (400, 5.8421, 5.6598, 5.4434, 5.0101)],
    (0.0, 0.9): [(100, 3.7302, 3.6574, 3.5688, 3.3758), (200, 3.8730, 3.8218, 3.7294, 3.5667),
                 (300, 3.9778, 3.9136, 3.8311, 3.6697), (400, 4.0328, 3.9745, 3.9018, 3.7407)],
    (-0.5, 0.01): [(100, 5.6261, 5.3293, 5.0340, 4.4005), (200, 6.1553, 5.8750, 5.5918, 4.9433),
                   (300, 6.4911, 6.1949, 5.9061, 5.2635), (400, 6.7129, 6.4242, 6.1317, 5.4905)],
    (-0.5, 0.5): [(100, 3.8513, 3.6362, 3.6449, 3.3084), (200, 4.0576, 3.8497, 3.8682, 3.5411),
                  (300, 4.1810, 3.9722, 3.9885, 3.6696), (400, 4.2681, 4.0559, 4.0818, 3.7593)],
    (-0.5, 0.9): [(100, 3.2341, 3.0222, 3.1334, 2.8556), (200, 3.3550, 3.1547, 3.2529, 3.0027),
                  (300, 3.4152, 3.2281, 3.3089, 3.0838), (400, 3.4542, 3.2747, 3.3666, 3.1348)],
    (0.5, 0.01): [(100, 17.2517, 14.5254, 12.5621, 9.3600), (200, 20.1402, 17.2179, 15.2273, 11.8155),
                  (300, 21.8208, 18.8028, 16.8002, 13.3295), (400, 22.9024, 19.9526, 17.9379, 14.4156)],
    (0.5, 0.5): [(100, 9.5787, 8.8826, 7.7808, 6.4275), (200, 10.9615, 10.2309, 9.1228, 7.6872),
                 (300, 11.8190, 11.0263, 9.9153, 8.4447), (400, 12.3540, 11.5900, 10.5127, 8.9938)],
    (0.5, 0.9): [(100, 4.8245, 4.7586, 4.4862, 4.2058), (200, 5.1108, 5.0501, 4.8206, 4.5406),
                 (300, 5.2656, 5.2123, 4.9900, 4.7238), (400, 5.3880, 5.3240, 5.1271, 4.8481)],
}


def oc_cells(detectors=("cusum", "sr"), lambda0s=OC_LAMBDA0, gammas=GAMMAS) -> list:
    _check(lambda0s, OC_LAMBDA0, "lambda0")
    out = []
    for lam0 in lambda0s:
        for det in detectors:
            for gamma, row in zip(GAMMAS, _OC[(det, float(lam0))]):
                if gamma in gammas:
                    out.append(OcCell(det, float(lam0), gamma, *row))
    return out


def oc_cell(detector: str, lambda0: float, gamma: int) -> OcCell:
    return oc_cells((detector,), (lambda0,), (gamma,))[0]


def add_cells(detectors=("cusum", "sr"), lambda_pres=ADD_LAMBDA_PRE, lambda0s=ADD_LAMBDA0,
              thresholds=ADD_THRESHOLDS) -> list:
    _check(lambda_pres, ADD_LAMBDA_PRE, "lambda_pre")
    _check(lambda0s, ADD_LAMBDA0, "lambda0")
    out = []
    for lp in lambda_pres:
        for lam0 in lambda0s:
            for A, c0, cinf, s0, sinf in _ADD[(float(lp), float(lam0))]:
                if A not in thresholds:
                    continue
                for det in detectors:
                    add0, addinf = (c0, cinf) if det == "cusum" else (s0, sinf)
                    out.append(AddCell(det, float(lp), float(lam0), float(A), add0, addinf))
    return out


def _check(values, allowed, name):
    bad = [v for v in values if float(v) not in allowed]
    if bad:
        raise ValidationError(f"{name} values {bad} are not tabulated; choose from {allowed}")
