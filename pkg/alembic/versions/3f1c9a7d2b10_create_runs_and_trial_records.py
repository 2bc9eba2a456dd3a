"""create runs and trial records

Revision ID: 3f1c9a7d2b10
Revises:
Create Date: 2026-10-19 10:12:41.208315

"""
from typing import Sequence, Union

from alembic import op
import sqlalchemy as sa


# revision identifiers, used by Alembic.
revision: str = '3f1c9a7d2b10'
down_revision: Union[str, None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    op.create_table('runs',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('created_at', sa.DateTime(timezone=True), server_default=sa.text('(CURRENT_TIMESTAMP)'), nullable=False),
    sa.Column('problem', sa.String(), nullable=False),
    sa.Column('method', sa.String(), nullable=False),
    sa.Column('J', sa.Integer(), nullable=False),
    sa.Column('alpha', sa.Float(), nullable=False),
    sa.Column('n', sa.Integer(), nullable=False),
    sa.Column('trials', sa.Integer(), nullable=False),
    sa.Column('rejections', sa.Integer(), nullable=False),
    sa.Column('failures', sa.Integer(), nullable=False),
    sa.Column('rejection_rate', sa.Float(), nullable=False),
    sa.Column('ci_low', sa.Float(), nullable=False),
    sa.Column('ci_high', sa.Float(), nullable=False),
    sa.Column('config', sa.JSON(), nullable=True),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_index(op.f('ix_runs_id'), 'runs', ['id'], unique=False)
    op.create_index(op.f('ix_runs_method'), 'runs', ['method'], unique=False)
    op.create_index(op.f('ix_runs_problem'), 'runs', ['problem'], unique=False)
    op.create_table('trial_records',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('run_id', sa.Integer(), nullable=False),
    sa.Column('trial_index', sa.Integer(), nullable=False),
    sa.Column('method', sa.String(), nullable=False),
    sa.Column('stat', sa.Float(), nullable=True),
    sa.Column('threshold', sa.Float(), nullable=True),
    sa.Column('p_value', sa.Float(), nullable=True),
    sa.Column('reject', sa.Boolean(), nullable=False),
    sa.Column('degenerate', sa.Boolean(), nullable=False),
    sa.Column('wall_time_seconds', sa.Float(), nullable=True),
    sa.Column('error', sa.Text(), nullable=True),
    sa.ForeignKeyConstraint(['run_id'], ['runs.id'], ondelete='CASCADE'),
    sa.PrimaryKeyConstraint('id'),
    sa.UniqueConstraint('run_id', 'trial_index', name='uix_run_trial')
    )
    op.create_index(op.f('ix_trial_records_id'), 'trial_records', ['id'], unique=False)
    op.create_index(op.f('ix_trial_records_run_id'), 'trial_records', ['run_id'], unique=False)


def downgrade() -> None:
    op.drop_index(op.f('ix_trial_records_run_id'), table_name='trial_records')
    op.drop_index(op.f('ix_trial_records_id'), table_name='trial_records')
    op.drop_table('trial_records')
    op.drop_index(op.f('ix_runs_problem'), table_name='runs')
    op.drop_index(op.f('ix_runs_method'), table_name='runs')
    op.drop_index(op.f('ix_runs_id'), table_name='runs')
    op.drop_table('runs')
