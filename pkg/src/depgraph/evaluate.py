"""UAS/LAS, ELAS/EULAS and tagging accuracy over gold/system CoNLL-U pairs.

Gold-token mode: gold and system files must contain the same sentences with
identical tokenization. Conventions follow the shared-task evaluation
scripts: LAS compares the universal relation (DEPREL truncated at the first
colon); ELAS compares full enhanced labels, EULAS truncates them at the
first colon. Graph metrics are F1 over dependency triples; tree and tag
metrics are accuracies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .conllu import Sentence


class AlignmentError(ValueError):
    pass


@dataclass
class MetricScore:
    correct: float
    gold_total: int
    system_total: int

    @property
    def precision(self) -> float:
        return self.correct / self.system_total if self.system_total else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) > 0 else 0.0

    @property
    def accuracy(self) -> float:
        return self.recall


@dataclass
class EvalReport:
    metrics: dict[str, MetricScore] = field(default_factory=dict)

    def __getitem__(self, name: str) -> MetricScore:
        return self.metrics[name]

    def to_dict(self) -> dict:
        return {
            name: {
                "precision": round(m.precision, 6),
                "recall": round(m.recall, 6),
                "f1": round(m.f1, 6),
                "correct": m.correct,
                "gold_total": m.gold_total,
                "system_total": m.system_total,
            }
            for name, m in self.metrics.items()
        }

    def table(self) -> str:
        lines = [f"{'Metric':<8} {'P':>8} {'R':>8} {'F1':>8}"]
        for name, m in self.metrics.items():
            lines.append(f"{name:<8} {m.precision:>8.4f} {m.recall:>8.4f} {m.f1:>8.4f}")
        return "\n".join(lines)


def _check_alignment(gold: list[Sentence], system: list[Sentence]) -> None:
    if len(gold) != len(system):
        raise AlignmentError(
            f"sentence count mismatch: gold {len(gold)}, system {len(system)}")
    for i, (g, s) in enumerate(zip(gold, system), start=1):
        if len(g) != len(s):
            raise AlignmentError(
                f"sentence {i}: token count mismatch (gold {len(g)}, system {len(s)})")
        if g.forms != s.forms:
            raise AlignmentError(f"sentence {i}: token forms differ")


def _universal(label: str) -> str:
    return label.split(":")[0]


def score_basic(gold: list[Sentence], system: list[Sentence]
                ) -> tuple[MetricScore, MetricScore]:
    """(UAS, LAS) over aligned tokens."""
    _check_alignment(gold, system)
    total = head_ok = las_ok = 0
    for g, s in zip(gold, system):
        for gt, st in zip(g.tokens, s.tokens):
            total += 1
            if gt.head is not None and gt.head == st.head:
                head_ok += 1
                if gt.deprel is not None and st.deprel is not None and \
                        _universal(gt.deprel) == _universal(st.deprel):
                    las_ok += 1
    return (MetricScore(head_ok, total, total), MetricScore(las_ok, total, total))


def score_enhanced(gold: list[Sentence], system: list[Sentence]
                   ) -> tuple[MetricScore, MetricScore]:
    """(EULAS, ELAS): F1 over enhanced (head, dependent, label) triples.

    ELAS matches full labels; EULAS truncates labels at the first colon.
    """
    _check_alignment(gold, system)
    elas_match = eulas_match = gold_total = sys_total = 0
    for g, s in zip(gold, system):
        g_edges = g.enhanced_edges()
        s_edges = s.enhanced_edges()
        gold_total += len(g_edges)
        sys_total += len(s_edges)
        elas_match += len(g_edges & s_edges)
        g_univ = _edge_multiset_universal(g_edges)
        s_univ = _edge_multiset_universal(s_edges)
        for key, count in g_univ.items():
            eulas_match += min(count, s_univ.get(key, 0))
    return (MetricScore(eulas_match, gold_total, sys_total),
            MetricScore(elas_match, gold_total, sys_total))


def _edge_multiset_universal(edges: set[tuple[int, int, str]]) -> dict:
    out: dict[tuple[int, int, str], int] = {}
    for h, d, lab in edges:
        key = (h, d, _universal(lab))
        out[key] = out.get(key, 0) + 1
    return out


def score_tags(gold: list[Sentence], system: list[Sentence]
               ) -> tuple[MetricScore, MetricScore]:
    """(UPOS, UFeats) accuracy over aligned tokens; FEATS compared as the
    full bundle string."""
    _check_alignment(gold, system)
    total = upos_ok = feats_ok = 0
    for g, s in zip(gold, system):
        for gt, st in zip(g.tokens, s.tokens):
            total += 1
            if gt.upos == st.upos:
                upos_ok += 1
            if gt.feats == st.feats:
                feats_ok += 1
    return (MetricScore(upos_ok, total, total), MetricScore(feats_ok, total, total))


def evaluate(gold: list[Sentence], system: list[Sentence],
             mode: str = "basic") -> EvalReport:
    """mode: "basic" (UAS/LAS + tags), "enhanced" (EULAS/ELAS), or "all"."""
    report = EvalReport()
    if mode in ("basic", "all"):
        uas, las = score_basic(gold, system)
        report.metrics["UAS"] = uas
        report.metrics["LAS"] = las
        upos, ufeats = score_tags(gold, system)
        report.metrics["UPOS"] = upos
        report.metrics["UFeats"] = ufeats
    if mode in ("enhanced", "all"):
        eulas, elas = score_enhanced(gold, system)
        report.metrics["EULAS"] = eulas
        report.metrics["ELAS"] = elas
    return report
