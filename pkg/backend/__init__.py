# Backend package

