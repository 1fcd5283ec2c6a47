"""LineGuard Configuration Init"""
