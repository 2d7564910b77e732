"""Writes the ingestion fixtures. Counts asserted by the tests follow from
the construction below."""
import csv
import pathlib

HERE = pathlib.Path(__file__).parent
GOOD = "public int f{n}(int x) {{\n    return x + {n};\n}}"
BAD = "public int f{n}(int x) {{\n    return x + ;\n"


def write(name, header, rows):
    with open(HERE / name, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)


HEADER = ["SubjectID", "ProblemID", "ServerTimestamp", "Code"]

# 100 first attempts over 20 students x 5 problems; every n % 20 == 7 and
# n % 20 == 13 plus n % 20 == 19 (where n < 100) fails to parse: 15 rows.
rows = []
for n in range(100):
    student, problem = f"S{n // 5}", f"P{n % 5}"
    bad = n % 20 in (7, 13, 19)
    rows.append([student, problem, str(1000 + n), (BAD if bad else GOOD).format(n=n)])
write("filter_100.csv", HEADER, rows)

# Repeated attempts: S1/P1 has t=20 first in file and t=10 later, so the
# t=10 row wins; S2/P1 has two rows at t=5 and the first in file wins; S3/P2
# compares ISO timestamps lexicographically.
write(
    "attempts.csv",
    HEADER,
    [
        ["S1", "P1", "20", GOOD.format(n=1)],
        ["S1", "P1", "10", GOOD.format(n=2)],
        ["S2", "P1", "5", GOOD.format(n=3)],
        ["S2", "P1", "5", GOOD.format(n=4)],
        ["S2", "P1", "7", GOOD.format(n=5)],
        ["S3", "P2", "2021-03-01T10:00:00", GOOD.format(n=6)],
        ["S3", "P2", "2021-02-28T23:59:59", GOOD.format(n=7)],
        ["S1", "P2", "1", BAD.format(n=8)],
        ["S1", "P2", "2", GOOD.format(n=9)],
    ],
)

write("missing_code.csv", ["SubjectID", "ProblemID", "ServerTimestamp"], [["S1", "P1", "1"]])

with open(HERE / "ragged.csv", "w", newline="") as f:
    f.write("SubjectID,ProblemID,ServerTimestamp,Code\r\n")
    f.write('S1,P1,1,"' + GOOD.format(n=1).replace('"', '""') + '"\r\n')
    f.write("S2,P1,2\r\n")

write("all_bad.csv", HEADER, [["S1", "P1", "1", BAD.format(n=1)]])
