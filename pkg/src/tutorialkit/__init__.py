"""tutorialkit: turn instructional-video transcripts and frames into
editable mixed-media tutorials (steps, objects, dependency graph), with an
evaluation harness and an HTTP editing service."""

__version__ = "0.1.0"
