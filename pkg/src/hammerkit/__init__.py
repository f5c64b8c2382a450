"""hammerkit: premise selection, HOL-to-TPTP translation, and prover
portfolio evaluation at desk scale."""

from .corpus import Corpus, DepRecord, TheoremEntry, expand_unnamed, ingest, split_conjuncts
from .features import FeatureSet, NormMode, extract_features
from .learners import (
    DepPolicy, KnnStore, NbModel, TrainingExample, build_examples, knn_rank,
    nb_rank, nb_update,
)
from .provers import FixtureProver, ProverRun, ProverSpec, pseudo_minimize, run_prover
from .terms import HolTerm, HolType, Signature, beta_normalize, parse_term, parse_type
from .translate import (
    FoProblem, export_fof, export_tff1, export_thf, lambda_lift, monomorphise,
    translate_problem,
)

__version__ = "0.1.0"
