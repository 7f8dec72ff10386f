# app/routes/prior.py

"""
Prior Routes

POST /prior scores a list of symbolic actions for a textual state description
with the mock oracle, using the same wire format the remote provider speaks.
"""

import logging

from fastapi import APIRouter, Depends, HTTPException, status

from app.dependencies import get_prior_oracle
from app.exceptions import ProviderError
from app.providers import MockPriorProvider
from app.schemas import ErrorResponse, PriorRequest, PriorResponse

logger = logging.getLogger("app.routes")

router = APIRouter(tags=["prior"])


@router.post("/prior", response_model=PriorResponse, responses={400: {"model": ErrorResponse}})
def score_prior(request: PriorRequest, oracle: MockPriorProvider = Depends(get_prior_oracle)):
    """
    Prior probabilities for the requested actions at the described state.

    Unparseable descriptions and actions outside the oracle's vocabulary
    are rejected with 400.
    """
    try:
        prior = oracle.query_description(request.state, request.actions)
    except ProviderError as e:
        logger.warning("Prior request rejected: %s", e)
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    logger.info("Scored %d actions (query %d)", len(request.actions), oracle.stats.query_count)
    return PriorResponse(probs=prior.probs)
