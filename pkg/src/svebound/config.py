"""Run configuration shared by every numerical routine."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0

    # merit: inner supremum over z in K
    budget_z: int = 256
    refine_iters: int = 60
    refine_shrink: float = 0.5
    refine_starts: int = 3
    value_cap: float = 1e12
    use_closed_form: bool = True
    zero_tol: float = 1e-10  # nu <= zero_tol counts as zero
    member_tol: float = 1e-9
    active_eps: float | None = None  # default 1e-3 * max(1, nu)

    # slopes
    slope_r0: float = 0.1
    slope_ratio: float = 0.5
    slope_levels: int = 6
    budget_dirs: int | None = None  # default 64 * dim

    # probing K for ssinf / sigma / gamma
    probe_budget: int = 50
    probe_radius: float = 2.0

    # B-derivatives
    fd_steps: tuple = (1e-2, 1e-3, 1e-4)
    fd_tol: float = 1e-4

    # increase
    sigma_tol: float = 1e-3
    sigma_refine_iters: int = 30

    # subdifferentials
    arc_resolution: float = 1e-2
    minnorm_tol: float = 1e-9
    gamma_tol: float = 1e-3
    gamma_safety: float = 0.1

    # audits
    concavity_pairs: int = 10_000
    c_bound_growth: float = 2.0

    # solver
    starts: int = 8
    max_evals: int = 5000
    solve_zero_tol: float = 1e-6
    refresh_every: int = 50
    final_budget_factor: int = 4

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("seed", "use_closed_form", "fd_steps", "active_eps", "budget_dirs"):
                continue
            if isinstance(v, (int, float)) and v <= 0:
                raise ValueError(f"config field {f.name} must be positive, got {v}")
        if self.budget_dirs is not None and self.budget_dirs <= 0:
            raise ValueError("budget_dirs must be positive")
        if not 0 < self.gamma_safety < 1:
            raise ValueError("gamma_safety must lie in (0, 1)")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fd_steps"] = list(self.fd_steps)
        return d
