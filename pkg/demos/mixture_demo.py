"""The mixture property in action: averaging the terminal Gaussians of
many localization paths recovers standard-Gaussian expectations, even
though each individual component has collapsed onto a thin slab around
the fiber.
"""

from fiberloc import HalfSpace, One, SqNorm, mixture_check, paraboloid_map

rep = mixture_check(paraboloid_map(2), T=6.0, h=2e-3, n_paths=300,
                    functionals=[One(), SqNorm(), HalfSpace([1.0, 0.0])],
                    seed=7)

print(f"{rep.n_paths} paths to T={rep.T}, {rep.n_aborted} aborted, "
      f"valid={rep.valid}")
print("functional        mixture_mean  reference   stderr   z")
for r in rep.rows:
    print(f"{r.functional:<18}{r.mixture_mean:10.4f}  {r.reference:9.4f}"
          f"  {r.stderr:7.4f}  {r.z_score:+5.2f}")
