"""How the equivalent sample size s trades width against data: w = s / (n + s)."""

from credalcfr.estimation import idm_interval

print("n".rjust(4) + "".join(f"s={s}".rjust(10) for s in (0.5, 1.0, 1.5, 2.0, 5.0)))
for n in (0, 1, 2, 5, 10, 20, 50, 100):
    print(f"{n:4d}" + "".join(f"{idm_interval([0, n], s, 0).width:10.4f}" for s in (0.5, 1.0, 1.5, 2.0, 5.0)))
print("\nwidth halves once n reaches s:", [idm_interval([0, s], s, 0).width for s in (1, 2, 5)])
