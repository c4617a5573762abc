#!/usr/bin/env python3
"""Random but realistic METAR/SPECI corpus with independently known values.

Each report is assembled from groups whose decoded value is chosen first, so
tests/data/metar_expected.csv is ground truth rather than parser output.
Reports are dated within March 2011. One truncated line is kept on purpose:
archives contain them and the loader must reject rather than crash.
"""
import csv
import pathlib
import random

SEED = 7
N = 259
KT, KMH = 0.514444, 1.0 / 3.6
KM_PER_SM = 1.609344
HPA_PER_INHG = 33.8638866667

STATIONS_METRIC = ["SCEL", "SCTE", "EGLL", "LFPG", "EDDF", "RJTT", "YSSY", "UUEE",
                   "ZBAA", "SBGR", "FAOR", "LEMD", "LIRF", "EHAM", "NZAA", "VHHH",
                   "OMDB", "ESSA", "EKCH", "LPPT"]
STATIONS_US = ["KSFO", "KJFK", "KORD", "KDEN", "KSEA", "PANC", "PHNL", "K1V4", "CYYZ", "CYVR"]
WEATHER = ["FG", "BR", "-RA", "+TSRA", "VCSH", "BCFG", "MIFG", "HZ", "-DZ", "SN", "FZFG",
           "-SHRA", "PRFG", "RA BR", "DZ FG", "VCFG", "-SN BR"]
CLOUDS = ["FEW008", "SCT020", "BKN035", "OVC100", "VV001", "NSC", "NCD", "SKC", "CLR",
          "BKN020CB", "FEW040TCU", "OVC003", "SCT///", "//////"]
SM_VIS = [("10SM", 10), ("P6SM", 6), ("3SM", 3), ("1/2SM", 0.5), ("1/4SM", 0.25),
          ("M1/4SM", 0.25), ("3/4SM", 0.75), ("1 1/2SM", 1.5), ("2 1/2SM", 2.5),
          ("1/8SM", 0.125), ("5SM", 5), ("1 3/4SM", 1.75)]
METRIC_VIS = [50, 100, 200, 300, 400, 600, 800, 900, 1000, 1200, 1500, 2000, 3000,
              4000, 5000, 6000, 7000, 8000, 9000]


def temp_group(t):
    return ("M%02d" % -t) if t < 0 else "%02d" % t


def build(rng, i):
    us = rng.random() < 0.4
    station = rng.choice(STATIONS_US if us else STATIONS_METRIC)
    exp = {"station": station, "vis": "", "wind": "", "temp": "", "dew": "", "pres": ""}
    g = []
    r = rng.random()
    if r < 0.3:
        g.append("METAR")
    elif r < 0.4:
        g.append("SPECI")
    elif r < 0.45:
        g += ["METAR", "COR"]
    g.append(station)
    day, hour, minute = rng.randint(1, 31), rng.randint(0, 23), rng.choice([0, 20, 30, 50, 51, 53])
    g.append("%02d%02d%02dZ" % (day, hour, minute))
    exp["time"] = "2011-03-%02dT%02d:%02d:00Z" % (day, hour, minute)
    if rng.random() < 0.15:
        g.append("AUTO")

    # wind
    w = rng.random()
    if w < 0.05:
        g.append("/////KT")
    else:
        unit = "KT" if us or rng.random() < 0.6 else rng.choice(["MPS", "KMH"])
        factor = {"KT": KT, "MPS": 1.0, "KMH": KMH}[unit]
        speed = 0 if rng.random() < 0.1 else rng.randint(1, 45 if unit != "MPS" else 20)
        direction = "VRB" if rng.random() < 0.1 else "%03d" % (rng.randint(0, 35) * 10)
        gust = "G%02d" % (speed + rng.randint(5, 15)) if speed > 8 and rng.random() < 0.25 else ""
        g.append("%s%02d%s%s" % (direction if speed else "000", speed, gust, unit))
        exp["wind"] = repr(speed * factor)
        if speed > 3 and direction != "VRB" and rng.random() < 0.15:
            a = int(direction)
            g.append("%03dV%03d" % (a, (a + 60) % 360))

    # visibility, weather, clouds
    cavok = False
    v = rng.random()
    if not us and v < 0.12:
        g.append("CAVOK")
        exp["vis"] = repr(10.0)
        cavok = True
    elif v < 0.15:
        g.append("////")
    elif us:
        tok, miles = rng.choice(SM_VIS)
        g.append(tok)
        exp["vis"] = repr(miles * KM_PER_SM)
    else:
        if rng.random() < 0.3:
            g.append("9999" + ("NDV" if rng.random() < 0.3 else ""))
            exp["vis"] = repr(10.0)
        else:
            m = rng.choice(METRIC_VIS)
            g.append("%04d" % m)
            exp["vis"] = repr(m / 1000.0)
            if m >= 2000 and rng.random() < 0.2:
                g.append("%04d%s" % (m // 2, rng.choice(["SW", "N", "E"])))
            if m < 1500 and rng.random() < 0.4:
                g.append("R%02dL/%s%04d%s" % (rng.randint(1, 36), rng.choice(["", "P", "M"]),
                                             rng.choice([150, 600, 1200, 1500]), rng.choice(["", "N", "U", "D"])))
    if not cavok:
        for _ in range(rng.randint(0, 2)):
            g.append(rng.choice(WEATHER))
        for _ in range(rng.randint(1, 3)):
            g.append(rng.choice(CLOUDS))

    # temperature / dew point
    t = rng.random()
    if t < 0.04:
        g.append("/////")
    else:
        temp = rng.randint(-25, 38)
        dew = temp - rng.randint(0, 15)
        if t < 0.07:
            g.append(temp_group(temp) + "/")
            exp["temp"] = repr(float(temp))
        else:
            g.append(temp_group(temp) + "/" + temp_group(dew))
            exp["temp"], exp["dew"] = repr(float(temp)), repr(float(dew))

    # pressure
    p = rng.random()
    if p < 0.04:
        g.append("Q////")
    elif us:
        inhg = rng.randint(2880, 3090)
        g.append("A%04d" % inhg)
        exp["pres"] = repr(inhg / 100.0 * HPA_PER_INHG)
    else:
        hpa = rng.randint(975, 1045)
        g.append("Q%04d" % hpa)
        exp["pres"] = repr(float(hpa))

    # trend and remarks, which carry groups that must not be decoded
    tr = rng.random()
    if tr < 0.2:
        g.append("NOSIG")
    elif tr < 0.3:
        g += ["TEMPO", "0500", "FG", "VV001"]
    elif tr < 0.37:
        g += ["BECMG", "FM%02d%02d00" % (hour, minute), "9999", "NSW"]
    if us and rng.random() < 0.6:
        g += ["RMK", "AO2", "SLP%03d" % rng.randint(0, 999), "VIS", "1/2V2", "T0%03d0%03d" % (rng.randint(0, 300), rng.randint(0, 300))]
        if rng.random() < 0.3:
            g += ["1/4SM", "M05/M07"]
    line = " ".join(g)
    if rng.random() < 0.2:
        line += "="
    return line, exp


def main():
    rng = random.Random(SEED)
    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    root.mkdir(parents=True, exist_ok=True)
    lines, expected = [], []
    for i in range(N):
        line, exp = build(rng, i)
        lines.append(line)
        expected.append(exp)
    # truncated transmission: station only
    lines.insert(137, "SCEL 2412")
    expected.insert(137, None)

    with (root / "metar_corpus.txt").open("w") as f:
        f.write("# Synthetic METAR/SPECI corpus, dated March 2011. See tests/oracles/make_metar_corpus.py\n")
        for line in lines:
            f.write(line + "\n")
    with (root / "metar_expected.csv").open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["line", "status", "station", "time", "visibility_km", "wind_mps",
                    "temp_c", "dewpoint_c", "pressure_hpa"])
        for k, exp in enumerate(expected):
            lineno = k + 2  # header comment is line 1
            if exp is None:
                w.writerow([lineno, "reject", "", "", "", "", "", "", ""])
            else:
                w.writerow([lineno, "ok", exp["station"], exp["time"], exp["vis"], exp["wind"],
                            exp["temp"], exp["dew"], exp["pres"]])
    print(f"wrote {len(lines)} reports")


if __name__ == "__main__":
    main()
