"""crasp-forge: counting-RASP programs, CoT generation, TM compilation,
and algorithmic-reasoning corpora."""

from .tokens import (EOS, SEP, Token, parse_token, parse_tokens, render_token,
                     render_tokens)
from .program import (CRASP, CRASP_POS, CSTAR_RASP, Program, ProgramError,
                      validate_program)
from .evaluator import EvalError, EvalTable, evaluate
from .stepper import EvalState, evaluate_incremental
from .dsl import (ParseError, parse_cot_program, parse_program,
                  render_cot_program, render_program)
from .cot import (AnchorNotSignpost, CotProgram, GenerationError,
                  GenerationResult, IndexUnderflow, MalformedAnnotation,
                  MultipleActive, OutputClause, SignpostClause, ZeroActive,
                  annotate, deannotate, generate, next_token, validate_cot)
from .tm import (RunResult, StepRecord, TmFormatError, TmSpec, load_tm,
                 simulate, value_change_log)
from .tmcompile import (C_BOUND, CompileError, compile_tm, tm_prompt,
                        trace_length_check, verify_equivalence)
from .corpus import (CorpusRecord, TaskConfig, gen_dataset, gen_record,
                     task_oracle)
from .formulas import count_formulas, sample_formula

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
