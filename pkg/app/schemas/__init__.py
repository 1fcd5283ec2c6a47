"""Schemas Module - Pydantic models for corpus, decoding and report records"""

from app.schemas.models import CodePair, CostReport, FragmentSample, GenerationTrace, GuardResult, Submission

__all__ = ["Submission", "CodePair", "FragmentSample", "GenerationTrace", "GuardResult", "CostReport"]
