# Agent package
