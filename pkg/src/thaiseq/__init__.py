"""Thai text preprocessing, tokenization and non-neural sequence baselines."""

from thaiseq.errors import (AlignmentError, ConfigError, FitError, FormatError, ReportError, SchemeError,
                            ShapeError, ThaiSeqError)
from thaiseq.segment import Lexicon, Segmentation, build_lexicon, load_lexicon, segment_maximal_matching, segment_syllables
from thaiseq.textproc import CleanConfig, Corpus, Record, clean_text, dedup, filter_by_length

__version__ = "0.1.0"
