"""Write data/front.csv: u(x) = -a (x/w) exp(-(x/w)^2) on the lifespan.toml grid."""
import math
import sys

L, N = 10.0, 32768
a = float(sys.argv[1]) if len(sys.argv) > 1 else 0.1
w = float(sys.argv[2]) if len(sys.argv) > 2 else 0.002

with open("data/front.csv", "w") as f:
    f.write("x,u\n")
    for i in range(N):
        x = -L / 2 + i * L / N
        s = x / w
        f.write(f"{x!r},{-a * s * math.exp(-s * s)!r}\n")
