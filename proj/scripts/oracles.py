#!/usr/bin/env python3
"""Independent oracle calculations used to pin expected values in the C++ tests.

Run before touching the C++ implementation; the printed values are frozen
into the test sources. Pure stdlib, no project code imported.
"""

import hashlib
import math


def haversine(lat1, lon1, lat2, lon2, radius=6_371_000.0):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return radius * 2 * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def bearing(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    y = math.sin(dl) * math.cos(p2)
    x = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dl)
    return (math.degrees(math.atan2(y, x)) + 360.0) % 360.0


def lora_airtime(payload_len, sf, cr_denominator_minus4, bw_hz, preamble, explicit_header=True, crc=True):
    """Standard LoRa PHY airtime. cr_denominator_minus4: 1 for 4/5 .. 4 for 4/8."""
    t_sym = (2.0 ** sf) / bw_hz
    de = 1 if (sf >= 11 and bw_hz == 125_000) else 0
    ih = 0 if explicit_header else 1
    crc_bits = 16 if crc else 0
    num = 8 * payload_len - 4 * sf + 28 + crc_bits - 20 * ih
    den = 4 * (sf - 2 * de)
    n_payload = 8 + max(math.ceil(num / den) * (cr_denominator_minus4 + 4), 0)
    return (preamble + 4.25 + n_payload) * t_sym


def main():
    print("== haversine ==")
    d = haversine(40.6405, -8.6538, 40.6405, -8.6438)
    print(f"(40.6405,-8.6538)->(40.6405,-8.6438): {d!r} m")

    print("== bearing ==")
    b = bearing(40.6405, -8.6538, 40.6512, -8.6401)
    print(f"(40.6405,-8.6538)->(40.6512,-8.6401): {b!r} deg")

    print("== advance: 30 m east of (40.6405,-8.6538) along a 100 m segment ==")
    # end point of the test segment: 100 m due east (equirectangular construction)
    k = math.pi / 180.0 * 6_371_000.0
    dlon_100 = 100.0 / (k * math.cos(math.radians(40.6405)))
    print(f"segment end lon: {(-8.6538 + dlon_100)!r}")
    dlon_30 = 30.0 / (k * math.cos(math.radians(40.6405)))
    print(f"30 m along lon: {(-8.6538 + dlon_30)!r}")

    print("== fixed-point scaling (round half even) ==")
    for v in (40.6405, -8.6538):
        print(f"{v} -> {int(round(v * 1e6))}")

    print("== lora airtime ==")
    t = lora_airtime(20, sf=10, cr_denominator_minus4=1, bw_hz=125_000, preamble=8)
    print(f"SF10 CR4/5 BW125k 20B pre8: {t!r} s")
    t9 = lora_airtime(20, sf=9, cr_denominator_minus4=1, bw_hz=125_000, preamble=8)
    print(f"SF9  CR4/5 BW125k 20B pre8: {t9!r} s")
    t12 = lora_airtime(20, sf=12, cr_denominator_minus4=1, bw_hz=125_000, preamble=8)
    print(f"SF12 CR4/5 BW125k 20B pre8 (LDRO on): {t12!r} s")
    budget = 0.01 * 3600.0
    per_hour = math.ceil(3600.0 / 140.0) * t
    print(f"140 s cadence hourly airtime: {per_hour:.6f} s (budget {budget} s)")

    print("== rssi closed form ==")
    print(f"tx23 ref47 n2.7 d100: {23 - 47 - 10 * 2.7 * math.log10(100)!r} dBm")

    print("== logistic ==")
    print(f"p50+10k: {1.0 / (1.0 + math.exp(-10.0))!r}")

    print("== md5 ==")
    for s in (b"", b"abc"):
        print(f"md5({s!r}) = {hashlib.md5(s).hexdigest()}")

    print("== collision crossing fixture ==")
    # vehicle eastbound 10 m/s; pedestrian northbound 1.4 m/s crossing its line
    # 30 m ahead; pedestrian starts 4.2 m south of the line -> both reach the
    # crossing point at t = 3.0 s
    print(f"vehicle reaches crossing at t={30.0 / 10.0}, ped at t={4.2 / 1.4}")

    print("== dissemination hop model (tx ~ U[7,17], proc ~ U[14,39]) ==")
    import random
    rnd = random.Random(7)
    lat = sorted(
        sum(rnd.uniform(7, 17) for _ in range(3)) + sum(rnd.uniform(14, 39) for _ in range(2))
        for _ in range(100_000)
    )
    print(f"upcoming-rsu median ~= {lat[50_000]:.2f} ms, p90 ~= {lat[90_000]:.2f} ms")


if __name__ == "__main__":
    main()
