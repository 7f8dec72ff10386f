# app/routes/__init__.py

"""
Routes Package

This package contains all API route modules.
"""

from app.routes.prior import router as prior_router

__all__ = ["prior_router"]
