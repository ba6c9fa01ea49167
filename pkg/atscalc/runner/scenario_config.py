import os
from fractions import Fraction
from typing import Annotated, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationError

from atscalc.adversary.spring import SpringParams, spring_params
from atscalc.minplus.curve import Curve, constant_after, leaky_bucket, rate_latency, staircase
from atscalc.minplus.rational import q
from atscalc.utils.config import ConfigError, load_config
from atscalc.utils.logger import get_logger

logger = get_logger("scenario_config")


def _rational(value) -> Fraction:
    return q(value)


Rational = Annotated[Fraction, BeforeValidator(_rational), PlainSerializer(lambda v: str(v), return_type=str)]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class SpringSection(Section):
    r: Rational = Fraction(1)
    b: Rational = Fraction(1)
    dcap: Rational = Fraction(43, 50)
    d: Optional[Rational] = Fraction(17, 20)
    eps: Optional[Rational] = Fraction(1, 20)
    d_fraction: Rational = Fraction(17, 20)
    eps_fraction: Rational = Fraction(1, 3)

    def params(self) -> SpringParams:
        """Direct (d, eps) when both are given, otherwise derived from the fractions."""
        if (self.d is None) != (self.eps is None):
            raise ConfigError("spring.d and spring.eps must be given together")
        if self.d is not None:
            return SpringParams.direct(self.r, self.b, self.dcap, self.d, self.eps)
        return spring_params(self.r, self.b, self.dcap, self.d_fraction, self.eps_fraction)


class CurveSpec(Section):
    """A candidate curve by constructor name, or a serialized curve document."""
    kind: Literal["leaky_bucket", "rate_latency", "staircase", "constant_after", "curve"]
    rate: Optional[Rational] = None
    burst: Optional[Rational] = None
    latency: Optional[Rational] = None
    size: Optional[Rational] = None
    interval: Optional[Rational] = None
    curve: Optional[dict] = None

    def build(self) -> Curve:
        try:
            if self.kind == "leaky_bucket":
                return leaky_bucket(self.rate, self.burst)
            if self.kind == "rate_latency":
                return rate_latency(self.rate, self.latency)
            if self.kind == "staircase":
                return staircase(self.size, self.interval)
            if self.kind == "constant_after":
                return constant_after(self.size, self.interval)
            return Curve.from_json(self.curve)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Bad {self.kind} candidate: {e}") from e


def _default_candidates() -> dict:
    return {
        "leaky_bucket(4r, b)": CurveSpec(kind="leaky_bucket", rate=4, burst=1),
        "staircase(b, I)": CurveSpec(kind="staircase", size=1, interval=1),
        "rate_latency(3r, I)": CurveSpec(kind="rate_latency", rate=3, latency=1),
    }


class XmSection(Section):
    M: Optional[Rational] = None
    L_g: Optional[Rational] = None
    b1: Optional[Rational] = None


class ResidualSection(Section):
    theta_grid: Optional[list[Rational]] = None
    eps_prime: Optional[Rational] = None
    replay: bool = True
    candidates: dict[str, CurveSpec] = Field(default_factory=_default_candidates)


class Prop2Section(Section):
    n: int = Field(10, ge=1)
    candidate: CurveSpec = Field(
        default_factory=lambda: CurveSpec(kind="leaky_bucket", rate=1, burst=Fraction(11, 10))
    )


class RandomSection(Section):
    strict_sc_count: int = Field(1000, ge=0)
    shaping_count: int = Field(100, ge=0)
    max_packets: int = Field(200, ge=1)
    max_flows: int = Field(5, ge=1)


class OutputSection(Section):
    out_dir: str = "out"
    log_dir: Optional[str] = None

    @property
    def log_folder(self) -> str:
        """Run logs go to ``log_dir``, or to ``<out_dir>/logs`` when unset."""
        return self.log_dir if self.log_dir is not None else os.path.join(self.out_dir, "logs")


class ScenarioConfig(Section):
    scenario: str = "unit_spring"
    spring: SpringSection = Field(default_factory=SpringSection)
    n_periods: int = Field(50, ge=1)
    seed: int = 42
    count: int = Field(10000, ge=0)
    # 0 runs one worker process per CPU
    workers: int = Field(0, ge=0)
    xm: XmSection = Field(default_factory=XmSection)
    residual: ResidualSection = Field(default_factory=ResidualSection)
    prop2: Prop2Section = Field(default_factory=Prop2Section)
    random: RandomSection = Field(default_factory=RandomSection)
    output: OutputSection = Field(default_factory=OutputSection)

    def with_overrides(self, periods=None, seed=None, M=None, out=None, count=None) -> "ScenarioConfig":
        """Apply command-line flags on top of the file values."""
        doc = self.model_dump(mode="json")
        if periods is not None:
            doc["n_periods"] = periods
        if seed is not None:
            doc["seed"] = seed
        if count is not None:
            doc["count"] = count
        if M is not None:
            doc["xm"]["M"] = M
        if out is not None:
            doc["output"]["out_dir"] = out
        return parse_scenario(doc)


def parse_scenario(doc: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(doc)
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario config: {e}") from e


def load_scenario(path: Optional[str]) -> ScenarioConfig:
    """
    Read a scenario file; no path gives the built-in unit-rate Spring defaults.

    Raises:
        ConfigError: If the file is missing, malformed or fails validation.
    """
    if path is None:
        return ScenarioConfig()
    cfg = parse_scenario(load_config(path))
    logger.info(f"Scenario '{cfg.scenario}' loaded from {path}")
    return cfg
